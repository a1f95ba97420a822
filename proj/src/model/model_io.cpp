#include "causalsynth/model/model_io.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "causalsynth/errors.hpp"
#include "causalsynth/io/files.hpp"

namespace causalsynth::model {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_neg_inf(const json& j) {
  return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

json net_json(const nn::MlpSpec& spec, const nn::MlpParams& params) {
  return {{"layer_widths", spec.layer_widths},
          {"activation", nn::to_string(spec.activation)},
          {"output_dim", spec.output_dim},
          {"params", params.flatten()}};
}

nn::MlpSpec spec_from(const json& j) {
  nn::MlpSpec s;
  s.layer_widths = j.at("layer_widths").get<std::vector<int>>();
  s.activation = nn::activation_from_string(j.at("activation").get<std::string>());
  s.output_dim = j.at("output_dim").get<int>();
  s.validate();
  return s;
}

nn::MlpParams params_from(const nn::MlpSpec& spec, const json& j) {
  nn::MlpParams p = nn::zeros_like(spec);
  const auto flat = j.get<std::vector<double>>();
  p.unflatten(flat);
  return p;
}

}  // namespace

std::string model_to_json(const GenerativeModel& m) {
  json j;
  j["format"] = "causalsynth-model";
  j["format_version"] = kModelFormatVersion;
  j["preprocess"] = {{"mode", to_string(m.preprocess.mode)},
                     {"w_center", vec(m.preprocess.w_center)},
                     {"w_scale", vec(m.preprocess.w_scale)},
                     {"y_center", m.preprocess.y_center},
                     {"y_scale", m.preprocess.y_scale}};
  j["covariate_names"] = m.covariate_names;
  j["treatment_name"] = m.treatment_name;
  j["outcome_name"] = m.outcome_name;
  j["outcome_family"] = {{"continuous", dist::to_string(m.family.continuous)},
                         {"flow_layers", m.family.flow_layers},
                         {"flow_units", m.family.flow_units},
                         {"num_atoms", m.family.num_atoms}};
  j["atoms"] = m.atoms;
  j["networks"] = {{"shared", net_json(m.nets.shared_spec, m.nets.shared)},
                   {"treatment", net_json(m.nets.treatment_spec, m.nets.treatment)},
                   {"outcome0", net_json(m.nets.outcome_spec, m.nets.outcome0)},
                   {"outcome1", net_json(m.nets.outcome_spec, m.nets.outcome1)}};
  std::vector<double> pool;
  pool.reserve(static_cast<std::size_t>(m.covariate_pool.size()));
  for (Eigen::Index r = 0; r < m.covariate_pool.rows(); ++r)
    for (Eigen::Index c = 0; c < m.covariate_pool.cols(); ++c) pool.push_back(m.covariate_pool(r, c));
  j["covariate_pool"] = {{"rows", m.covariate_pool.rows()}, {"cols", m.covariate_pool.cols()}, {"values", pool}};
  j["knobs"] = {{"positivity_alpha", m.knobs.positivity_alpha},
                {"effect_delta", m.knobs.effect_delta},
                {"heterogeneity_lambda", m.knobs.heterogeneity_lambda}};
  j["base_ate"] = m.base_ate;
  json traj = json::array();
  for (double v : m.fit.validation_trajectory) traj.push_back(finite_or_null(v));
  j["fit"] = {{"seed", m.fit.seed},
              {"candidate", m.fit.candidate},
              {"epochs", m.fit.epochs},
              {"validation_log_likelihood", finite_or_null(m.fit.validation_log_likelihood)},
              {"validation_trajectory", traj},
              {"gate_p_value", m.fit.gate_p_value}};
  return j.dump(1) + "\n";
}

GenerativeModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CorruptFileError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("format_version") || !j["format_version"].is_number_integer())
    throw CorruptFileError("model file has no integer format_version field");
  const int version = j["format_version"].get<int>();
  if (version != kModelFormatVersion) throw VersionError(version, kModelFormatVersion);

  GenerativeModel m;
  try {
    if (j.at("format").get<std::string>() != "causalsynth-model")
      throw CorruptFileError("model file has an unexpected format tag");
    const json& p = j.at("preprocess");
    m.preprocess.mode = scaling_mode_from_string(p.at("mode").get<std::string>());
    m.preprocess.w_center = to_vec(p.at("w_center"));
    m.preprocess.w_scale = to_vec(p.at("w_scale"));
    m.preprocess.y_center = p.at("y_center").get<double>();
    m.preprocess.y_scale = p.at("y_scale").get<double>();
    m.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
    m.treatment_name = j.at("treatment_name").get<std::string>();
    m.outcome_name = j.at("outcome_name").get<std::string>();
    const json& f = j.at("outcome_family");
    m.family.continuous = dist::continuous_family_from_string(f.at("continuous").get<std::string>());
    m.family.flow_layers = f.at("flow_layers").get<int>();
    m.family.flow_units = f.at("flow_units").get<int>();
    m.family.num_atoms = f.at("num_atoms").get<std::size_t>();
    m.atoms = j.at("atoms").get<std::vector<double>>();
    const json& n = j.at("networks");
    m.nets.shared_spec = spec_from(n.at("shared"));
    m.nets.shared = params_from(m.nets.shared_spec, n.at("shared").at("params"));
    m.nets.treatment_spec = spec_from(n.at("treatment"));
    m.nets.treatment = params_from(m.nets.treatment_spec, n.at("treatment").at("params"));
    m.nets.outcome_spec = spec_from(n.at("outcome0"));
    if (spec_from(n.at("outcome1")) != m.nets.outcome_spec) throw CorruptFileError("outcome nets differ in shape");
    m.nets.outcome0 = params_from(m.nets.outcome_spec, n.at("outcome0").at("params"));
    m.nets.outcome1 = params_from(m.nets.outcome_spec, n.at("outcome1").at("params"));
    const json& pool = j.at("covariate_pool");
    const auto rows = pool.at("rows").get<Eigen::Index>();
    const auto cols = pool.at("cols").get<Eigen::Index>();
    const auto values = pool.at("values").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(values.size()) != rows * cols)
      throw CorruptFileError("covariate pool size does not match its shape");
    m.covariate_pool.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m.covariate_pool(r, c) = values[static_cast<std::size_t>(r * cols + c)];
    const json& k = j.at("knobs");
    m.knobs.positivity_alpha = k.at("positivity_alpha").get<double>();
    m.knobs.effect_delta = k.at("effect_delta").get<double>();
    m.knobs.heterogeneity_lambda = k.at("heterogeneity_lambda").get<double>();
    m.base_ate = j.at("base_ate").get<double>();
    const json& fj = j.at("fit");
    m.fit.seed = fj.at("seed").get<std::uint64_t>();
    m.fit.candidate = fj.at("candidate").get<std::string>();
    m.fit.epochs = fj.at("epochs").get<int>();
    m.fit.validation_log_likelihood = number_or_neg_inf(fj.at("validation_log_likelihood"));
    for (const auto& v : fj.at("validation_trajectory")) m.fit.validation_trajectory.push_back(number_or_neg_inf(v));
    m.fit.gate_p_value = fj.at("gate_p_value").get<double>();
    m.validate();
  } catch (const CorruptFileError&) {
    throw;
  } catch (const json::exception& e) {
    throw CorruptFileError(std::string("model file is missing or mistypes a field: ") + e.what());
  } catch (const Error& e) {
    throw CorruptFileError(std::string("model file content is inconsistent: ") + e.what());
  }
  return m;
}

void save_model(const GenerativeModel& model, const std::filesystem::path& path) {
  io::write_file_atomic(path, model_to_json(model));
}

GenerativeModel load_model(const std::filesystem::path& path) { return model_from_json(io::read_file(path)); }

}  // namespace causalsynth::model
