#include "usagelog/config.hpp"

#include <charconv>
#include <fstream>

#include "usagelog/error.hpp"
#include "usagelog/xml.hpp"

namespace usagelog {

KeyValues read_key_values(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read " + file.string());
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = xml::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::InvalidConfig,
                  file.string() + ":" + std::to_string(line_no) + ": expected key = value");
    out[std::string(xml::trim(t.substr(0, eq)))] = std::string(xml::trim(t.substr(eq + 1)));
  }
  return out;
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::InvalidConfig, "invalid value '" + value + "' for " + key);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || v.empty()) bad_value(key, v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v);
}

std::optional<std::filesystem::path> to_optional_path(const std::string& v) {
  if (v.empty()) return std::nullopt;
  return std::filesystem::path(v);
}

}  // namespace

const std::vector<std::string>& PipelineConfig::keys() {
  static const std::vector<std::string> k{
      "store",          "artifacts",      "include_harvested", "session_gap_minutes",
      "title_distance", "k_max",          "r2_threshold",      "weight_mode",
      "graph_mode",     "damping",        "tolerance",         "max_iterations",
      "pca_top_n",      "flag_fraction",  "impact_factors",    "api_bind",
      "secret_key_file",
  };
  return k;
}

void PipelineConfig::apply(const KeyValues& values) {
  for (const auto& [key, v] : values) {
    if (key == "store") store = v;
    else if (key == "artifacts") artifacts = v;
    else if (key == "include_harvested") include_harvested = to_bool(key, v);
    else if (key == "session_gap_minutes") session_gap_minutes = to_double(key, v);
    else if (key == "title_distance") title_distance = to_size(key, v);
    else if (key == "k_max") k_max = to_size(key, v);
    else if (key == "r2_threshold") r2_threshold = to_double(key, v);
    else if (key == "weight_mode") {
      try {
        weight_mode = parse_weight_mode(v);
      } catch (const Error&) {
        bad_value(key, v);
      }
    } else if (key == "graph_mode") {
      try {
        graph_mode = parse_graph_mode(v);
      } catch (const Error&) {
        bad_value(key, v);
      }
    } else if (key == "damping") damping = to_double(key, v);
    else if (key == "tolerance") tolerance = to_double(key, v);
    else if (key == "max_iterations") max_iterations = to_size(key, v);
    else if (key == "pca_top_n") pca_top_n = to_size(key, v);
    else if (key == "flag_fraction") flag_fraction = to_double(key, v);
    else if (key == "impact_factors") impact_factors = to_optional_path(v);
    else if (key == "api_bind") api_bind = v;
    else if (key == "secret_key_file") secret_key_file = to_optional_path(v);
    else throw Error(ErrorCode::InvalidConfig, "unknown configuration key '" + key + "'");
  }
}

KeyValues PipelineConfig::to_key_values() const {
  auto num = [](double d) { return format_double(d); };
  return {
      {"store", store.string()},
      {"artifacts", artifacts.string()},
      {"include_harvested", include_harvested ? "true" : "false"},
      {"session_gap_minutes", num(session_gap_minutes)},
      {"title_distance", std::to_string(title_distance)},
      {"k_max", std::to_string(k_max)},
      {"r2_threshold", num(r2_threshold)},
      {"weight_mode", to_string(weight_mode)},
      {"graph_mode", to_string(graph_mode)},
      {"damping", num(damping)},
      {"tolerance", num(tolerance)},
      {"max_iterations", std::to_string(max_iterations)},
      {"pca_top_n", std::to_string(pca_top_n)},
      {"flag_fraction", num(flag_fraction)},
      {"impact_factors", impact_factors ? impact_factors->string() : ""},
      {"api_bind", api_bind},
      {"secret_key_file", secret_key_file ? secret_key_file->string() : ""},
  };
}

void PipelineConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (store.empty()) bad("store is not set");
  if (!(session_gap_minutes > 0)) bad("session_gap_minutes must be positive");
  if (!(r2_threshold > 0 && r2_threshold <= 1)) bad("r2_threshold must be in (0, 1]");
  if (!(damping > 0 && damping < 1)) bad("damping must be in (0, 1)");
  if (!(tolerance > 0)) bad("tolerance must be positive");
  if (max_iterations < 1) bad("max_iterations must be positive");
  if (pca_top_n < 3) bad("pca_top_n must be at least 3");
  if (!(flag_fraction >= 0 && flag_fraction <= 1)) bad("flag_fraction must be in [0, 1]");
  if (api_bind.find(':') == std::string::npos) bad("api_bind must be host:port");
}

std::filesystem::path PipelineConfig::artifacts_dir() const {
  return artifacts.empty() ? store / "artifacts" : artifacts;
}

}  // namespace usagelog
