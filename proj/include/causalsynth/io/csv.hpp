#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "causalsynth/model/dataset.hpp"
#include "causalsynth/model/generative_model.hpp"

namespace causalsynth::io {

// Header plus string cells. Lines starting with '#' and blank lines are
// skipped; double-quoted cells may contain commas and doubled quotes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
  std::vector<std::string> comments;      // '#' lines, without the '#'

  // Index of the named column, or -1.
  long column(const std::string& name) const;
};

// Throws ParseError on ragged rows or unterminated quotes.
CsvTable parse_csv(const std::string& text);
std::string quote_csv(const std::string& cell);
// Shortest text that parses back to the same double.
std::string format_double(double v);
// Whole-cell finite number, or ParseError naming row and column.
double parse_number(const std::string& cell, std::size_t row, const std::string& column);

// Covariates are every column other than t and y, in file order. Errors name
// the 1-based data row and the column.
model::Dataset parse_dataset(const std::string& text, const std::vector<double>& atoms = {});
model::Dataset load_dataset(const std::filesystem::path& path, const std::vector<double>& atoms = {});
std::string dataset_csv(const model::Dataset& data);
void save_dataset(const model::Dataset& data, const std::filesystem::path& path);

// Sidecar for sampled data: row,propensity,mu0,mu1,iate then "# ate=<value>".
std::string truth_csv(const model::GroundTruth& truth);
model::GroundTruth parse_truth(const std::string& text);

}  // namespace causalsynth::io
