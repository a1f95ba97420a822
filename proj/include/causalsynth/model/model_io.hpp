#pragma once

#include <filesystem>
#include <string>

#include "causalsynth/model/generative_model.hpp"

namespace causalsynth::model {

inline constexpr int kModelFormatVersion = 1;

std::string model_to_json(const GenerativeModel& model);
// Throws CorruptFileError for malformed content and VersionError for a
// format_version other than kModelFormatVersion.
GenerativeModel model_from_json(const std::string& text);

void save_model(const GenerativeModel& model, const std::filesystem::path& path);
GenerativeModel load_model(const std::filesystem::path& path);

}  // namespace causalsynth::model
