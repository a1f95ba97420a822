#include "causalsynth/io/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "causalsynth/errors.hpp"
#include "causalsynth/io/files.hpp"

namespace causalsynth::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && trim(cur).empty()) {
      cur.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      cells.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else if (!(was_quoted && (c == ' ' || c == '\t' || c == '\r'))) {
      if (was_quoted) throw ParseError("line " + std::to_string(line_no) + ": text after closing quote");
      cur += c;
    }
  }
  if (quoted) throw ParseError("line " + std::to_string(line_no) + ": unterminated quote");
  cells.push_back(was_quoted ? cur : trim(cur));
  return cells;
}

}  // namespace

long CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<long>(j);
  return -1;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_header = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    if (stripped[0] == '#') {
      t.comments.push_back(stripped.substr(1));
      continue;
    }
    auto cells = split_line(line, line_no);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError("row " + std::to_string(t.rows.size() + 1) + " (line " + std::to_string(line_no) + "): expected " +
                       std::to_string(t.header.size()) + " cells, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  if (!have_header) throw ParseError("no header line");
  return t;
}

std::string quote_csv(const std::string& cell) {
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  const auto where = [&] { return "row " + std::to_string(row) + ", column " + column + ": "; };
  if (cell.empty()) throw ParseError(where() + "empty cell");
  double v = 0.0;
  const char* first = cell.data();
  if (*first == '+') ++first;
  const auto r = std::from_chars(first, cell.data() + cell.size(), v);
  if (r.ec != std::errc() || r.ptr != cell.data() + cell.size())
    throw ParseError(where() + "'" + cell + "' is not a number");
  if (!std::isfinite(v)) throw ParseError(where() + "'" + cell + "' is not finite");
  return v;
}

model::Dataset parse_dataset(const std::string& text, const std::vector<double>& atoms) {
  const CsvTable t = parse_csv(text);
  const long tc = t.column("t");
  const long yc = t.column("y");
  if (tc < 0) throw ParseError("missing column t");
  if (yc < 0) throw ParseError("missing column y");
  std::vector<std::size_t> wc;
  model::Dataset d;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (static_cast<long>(j) == tc || static_cast<long>(j) == yc) continue;
    if (t.header[j].empty()) throw ParseError("column " + std::to_string(j + 1) + " has an empty name");
    for (const auto& seen : d.covariate_names)
      if (seen == t.header[j]) throw ParseError("duplicate column " + seen);
    wc.push_back(j);
    d.covariate_names.push_back(t.header[j]);
  }
  if (t.rows.empty()) throw ParseError("no data rows");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  d.W.resize(n, static_cast<Eigen::Index>(wc.size()));
  d.T.resize(n);
  d.Y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = t.rows[static_cast<std::size_t>(i)];
    const auto row = static_cast<std::size_t>(i) + 1;
    for (std::size_t k = 0; k < wc.size(); ++k)
      d.W(i, static_cast<Eigen::Index>(k)) = parse_number(r[wc[k]], row, t.header[wc[k]]);
    const double tv = parse_number(r[static_cast<std::size_t>(tc)], row, "t");
    if (tv != 0.0 && tv != 1.0)
      throw ParseError("row " + std::to_string(row) + ", column t: value " + r[static_cast<std::size_t>(tc)] +
                       " is not 0 or 1");
    d.T(i) = tv;
    d.Y(i) = parse_number(r[static_cast<std::size_t>(yc)], row, "y");
  }
  d.atoms = atoms;
  d.validate();
  return d;
}

model::Dataset load_dataset(const std::filesystem::path& path, const std::vector<double>& atoms) {
  const std::string text = read_file(path);
  try {
    return parse_dataset(text, atoms);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string dataset_csv(const model::Dataset& d) {
  d.validate();
  const auto names = d.covariate_names.empty() ? model::default_covariate_names(d.num_covariates()) : d.covariate_names;
  std::string out;
  for (const auto& n : names) out += (n.find_first_of(",\"#") == std::string::npos ? n : quote_csv(n)) + ",";
  out += "t,y\n";
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    for (Eigen::Index j = 0; j < d.num_covariates(); ++j) out += format_double(d.W(i, j)) + ",";
    out += (d.T(i) == 1.0 ? "1," : "0,") + format_double(d.Y(i)) + "\n";
  }
  return out;
}

void save_dataset(const model::Dataset& data, const std::filesystem::path& path) {
  write_file_atomic(path, dataset_csv(data));
}

std::string truth_csv(const model::GroundTruth& g) {
  std::string out = "row,propensity,mu0,mu1,iate\n";
  for (Eigen::Index i = 0; i < g.iate.size(); ++i)
    out += std::to_string(i + 1) + "," + format_double(g.propensity(i)) + "," + format_double(g.mu0(i)) + "," +
           format_double(g.mu1(i)) + "," + format_double(g.iate(i)) + "\n";
  return out + "# ate=" + format_double(g.ate) + "\n";
}

model::GroundTruth parse_truth(const std::string& text) {
  const CsvTable t = parse_csv(text);
  const std::vector<std::string> cols = {"row", "propensity", "mu0", "mu1", "iate"};
  if (t.header != cols) throw ParseError("truth file header must be row,propensity,mu0,mu1,iate");
  model::GroundTruth g;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  g.propensity.resize(n);
  g.mu0.resize(n);
  g.mu1.resize(n);
  g.iate.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = t.rows[static_cast<std::size_t>(i)];
    const auto row = static_cast<std::size_t>(i) + 1;
    g.propensity(i) = parse_number(r[1], row, "propensity");
    g.mu0(i) = parse_number(r[2], row, "mu0");
    g.mu1(i) = parse_number(r[3], row, "mu1");
    g.iate(i) = parse_number(r[4], row, "iate");
  }
  bool found = false;
  for (const auto& c : t.comments) {
    const std::string s = trim(c);
    if (s.rfind("ate=", 0) == 0) {
      g.ate = parse_number(s.substr(4), t.rows.size() + 1, "ate");
      found = true;
    }
  }
  if (!found) throw ParseError("truth file has no '# ate=' footer");
  return g;
}

}  // namespace causalsynth::io
