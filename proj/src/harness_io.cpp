#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "squeezelab/analytic_bs.hpp"
#include "squeezelab/error.hpp"
#include "squeezelab/harness.hpp"
#include "squeezelab/model.hpp"
#include "squeezelab/moments.hpp"
#include "squeezelab/numeric.hpp"

namespace squeezelab {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 6> kExperimentNames = {
    "fig3_bs_sweep", "fig4_tmm_sweep", "fig5_qcrb_compare", "fig6_min_vs_r", "single_point", "validate"};
constexpr std::array<std::string_view, 6> kExperimentAliases = {"fig3", "fig4", "fig5", "fig6", "single", "validate"};

constexpr std::array<std::string_view, 15> kRowFields = {
    "engine", "r",   "q_target", "q_measured", "tau",    "delta_phi",  "delta_phi_se", "delta_phi_atoms_only",
    "qcrb",   "qcrb_se", "n_traj", "n_diverged", "wall_time", "series", "flags"};

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::config, msg); }

bool same_double(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

template <class T>
T get_as(const json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    config_error(std::string("bad value for \"") + key + "\"");
  }
}

void check_grid(std::span<const double> values, const char* name, double lo, double hi, bool open_lo) {
  for (double v : values) {
    const bool above = open_lo ? v > lo : v >= lo;
    if (!std::isfinite(v) || !above || v > hi) {
      config_error(std::string(name) + " value " + std::to_string(v) + " is out of range");
    }
  }
}

void append_double(std::string& out, double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), res.ptr);
}

void append_field(std::string& out, std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) {
    out += s;
    return;
  }
  out += '"';
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

std::vector<std::vector<std::string>> parse_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  const auto end_record = [&] {
    rec.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(rec));
    rec.clear();
    field_started = false;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        field += c;
      }
      ++i;
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) throw Error(ErrorKind::invalid_argument, "stray quote inside a CSV field");
        quoted = true;
        field_started = true;
        break;
      case ',':
        rec.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field += c;
        field_started = true;
    }
    ++i;
  }
  if (quoted) throw Error(ErrorKind::invalid_argument, "unterminated quoted CSV field");
  if (field_started || !rec.empty()) end_record();
  return records;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::invalid_argument, "not a number: \"" + s + "\"");
  }
  return v;
}

std::int64_t parse_int(const std::string& s) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::invalid_argument, "not an integer: \"" + s + "\"");
  }
  return v;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json row_to_json(const SweepRow& r) {
  return json{{"engine", r.engine},
              {"r", number_or_null(r.r)},
              {"q_target", number_or_null(r.q_target)},
              {"q_measured", number_or_null(r.q_measured)},
              {"tau", number_or_null(r.tau)},
              {"delta_phi", number_or_null(r.delta_phi)},
              {"delta_phi_se", number_or_null(r.delta_phi_se)},
              {"delta_phi_atoms_only", number_or_null(r.delta_phi_atoms_only)},
              {"qcrb", number_or_null(r.qcrb)},
              {"qcrb_se", number_or_null(r.qcrb_se)},
              {"n_traj", r.n_traj},
              {"n_diverged", r.n_diverged},
              {"wall_time", r.wall_time},
              {"series", r.series},
              {"flags", r.flags}};
}

json meta_json(const RunResult& res) {
  json meta;
  meta["config"] = json::parse(config_to_json(res.config));
  meta["build_version"] = kBuildVersion;
  meta["seed"] = res.config.master_seed;
  meta["wall_time"] = res.config.timing ? res.wall_time : 0.0;
  const ExperimentConfig& c = res.config;
  json notes = json::object();
  if (!c.q_grid && c.q_values.empty() && c.experiment != Experiment::single_point &&
      c.experiment != Experiment::validate) {
    notes["q_grid"] = "30 log-spaced points in [min(5e-4, 0.1 C^2 N_t e^{-2r}), 0.95 q_max] per r";
  }
  if (c.experiment == Experiment::fig3_bs_sweep || c.experiment == Experiment::fig4_tmm_sweep) {
    notes["r_crit"] = bs_r_crit(c.n_atoms);
    notes["r_values"] = "representative values on both sides of r_crit";
  }
  if (c.experiment == Experiment::fig5_qcrb_compare) {
    notes["r_values"] = "fixed reproduction constant";
  }
  notes["wall_time"] = "0 unless timing is enabled; timings break byte-identical output";
  meta["notes"] = notes;
  return meta;
}

}  // namespace

std::string_view to_string(Experiment e) noexcept { return kExperimentNames[static_cast<std::size_t>(e)]; }

std::string_view to_string(Engine e) noexcept {
  switch (e) {
    case Engine::tw: return "tw";
    case Engine::pp: return "pp";
    case Engine::both: return "both";
  }
  return "tw";
}

std::string_view to_string(OutputFormat f) noexcept { return f == OutputFormat::csv ? "csv" : "json"; }

std::optional<Experiment> parse_experiment(std::string_view name) {
  for (std::size_t i = 0; i < kExperimentNames.size(); ++i) {
    if (name == kExperimentNames[i] || name == kExperimentAliases[i]) return static_cast<Experiment>(i);
  }
  return std::nullopt;
}

std::optional<Engine> parse_engine(std::string_view name) {
  if (name == "tw") return Engine::tw;
  if (name == "pp") return Engine::pp;
  if (name == "both") return Engine::both;
  return std::nullopt;
}

std::optional<OutputFormat> parse_format(std::string_view name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  return std::nullopt;
}

std::vector<double> QGridSpec::values() const {
  return log ? log_space(lo, hi, n) : lin_space(lo, hi, n);
}

void ExperimentConfig::validate() const {
  if (schema_version != kConfigSchemaVersion) {
    config_error("schema_version " + std::to_string(schema_version) + " is not supported");
  }
  if (n_atoms < 1) config_error("n_atoms must be >= 1");
  if (n_trajectories < static_cast<std::int64_t>(kDefaultBatches)) {
    config_error("n_trajectories must be >= 100");
  }
  if (pp_trajectories != 0 && pp_trajectories < static_cast<std::int64_t>(kDefaultBatches)) {
    config_error("pp_trajectories must be 0 or >= 100");
  }
  if (pp_steps < 16) config_error("pp_steps must be >= 16");
  check_grid(r_values, "r_values", 0.0, kMaxSqueezeR, false);
  check_grid(q_values, "q_values", 0.0, 1.0, true);
  check_grid(r_opt_q_values, "r_opt_q_values", 0.0, 1.0, true);
  check_grid(pp_q_values, "pp_q_values", 0.0, 1.0, true);
  if (q_grid) {
    if (!(q_grid->lo > 0.0 && q_grid->lo < q_grid->hi && q_grid->hi <= 1.0) || q_grid->n < 1) {
      config_error("q_grid needs 0 < lo < hi <= 1 and n >= 1");
    }
  }
  if (engine && *engine != Engine::tw &&
      (experiment == Experiment::fig3_bs_sweep || experiment == Experiment::fig5_qcrb_compare ||
       experiment == Experiment::fig6_min_vs_r)) {
    config_error(std::string(to_string(experiment)) + " only supports the tw engine");
  }
}

ExperimentConfig ExperimentConfig::resolved() const {
  ExperimentConfig c = *this;
  switch (c.experiment) {
    case Experiment::fig3_bs_sweep:
      if (c.r_values.empty()) c.r_values = {0.0, 1.0, 2.649, 3.5, 4.5};
      if (c.q_values.empty() && !c.q_grid) c.q_grid = QGridSpec{1e-3, 1.0, 200, true};
      break;
    case Experiment::fig4_tmm_sweep:
      if (c.r_values.empty()) c.r_values = {1.5, 2.65, 4.0};
      if (c.r_opt_q_values.empty()) c.r_opt_q_values = {0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
      if (c.pp_q_values.empty()) c.pp_q_values = {0.5, 0.7, 0.9};
      if (!c.engine) c.engine = Engine::both;
      break;
    case Experiment::fig5_qcrb_compare:
      if (c.r_values.empty()) c.r_values = {6.31};
      break;
    case Experiment::fig6_min_vs_r:
      if (c.r_values.empty()) c.r_values = lin_space(1.0, 9.0, 20);
      break;
    case Experiment::single_point:
      if (c.r_values.empty()) c.r_values = {1.0};
      if (c.q_values.empty() && !c.q_grid) c.q_values = {0.5};
      break;
    case Experiment::validate:
      if (!c.engine) c.engine = Engine::both;
      break;
  }
  if (!c.engine) c.engine = Engine::tw;
  if (c.pp_trajectories == 0) c.pp_trajectories = c.n_trajectories;
  return c;
}

ExperimentConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) config_error("config must be a JSON object");
  if (!j.contains("schema_version")) config_error("config lacks schema_version");

  static const std::set<std::string> known = {
      "schema_version", "experiment",  "n_atoms",   "r_values",     "q_values",      "q_grid",
      "r_opt_q_values", "pp_q_values", "n_trajectories", "pp_trajectories", "pp_steps", "master_seed",
      "engine",         "output_path", "output_format",  "timing"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) config_error("unknown config key \"" + key + "\"");
  }

  ExperimentConfig c;
  c.schema_version = get_as<int>(j["schema_version"], "schema_version");
  if (j.contains("experiment")) {
    const auto e = parse_experiment(get_as<std::string>(j["experiment"], "experiment"));
    if (!e) config_error("unknown experiment");
    c.experiment = *e;
  }
  if (j.contains("n_atoms")) c.n_atoms = get_as<std::int64_t>(j["n_atoms"], "n_atoms");
  if (j.contains("r_values")) c.r_values = get_as<std::vector<double>>(j["r_values"], "r_values");
  if (j.contains("q_values")) c.q_values = get_as<std::vector<double>>(j["q_values"], "q_values");
  if (j.contains("q_grid") && !j["q_grid"].is_null()) {
    const json& g = j["q_grid"];
    if (!g.is_object()) config_error("q_grid must be an object");
    QGridSpec spec;
    spec.lo = get_as<double>(g.value("lo", json()), "q_grid.lo");
    spec.hi = get_as<double>(g.value("hi", json()), "q_grid.hi");
    spec.n = get_as<std::size_t>(g.value("n", json()), "q_grid.n");
    if (g.contains("log")) spec.log = get_as<bool>(g["log"], "q_grid.log");
    c.q_grid = spec;
  }
  if (j.contains("r_opt_q_values")) {
    c.r_opt_q_values = get_as<std::vector<double>>(j["r_opt_q_values"], "r_opt_q_values");
  }
  if (j.contains("pp_q_values")) c.pp_q_values = get_as<std::vector<double>>(j["pp_q_values"], "pp_q_values");
  if (j.contains("n_trajectories")) c.n_trajectories = get_as<std::int64_t>(j["n_trajectories"], "n_trajectories");
  if (j.contains("pp_trajectories")) {
    c.pp_trajectories = get_as<std::int64_t>(j["pp_trajectories"], "pp_trajectories");
  }
  if (j.contains("pp_steps")) c.pp_steps = get_as<int>(j["pp_steps"], "pp_steps");
  if (j.contains("master_seed")) c.master_seed = get_as<std::uint64_t>(j["master_seed"], "master_seed");
  if (j.contains("engine") && !j["engine"].is_null()) {
    const auto e = parse_engine(get_as<std::string>(j["engine"], "engine"));
    if (!e) config_error("engine must be tw, pp or both");
    c.engine = *e;
  }
  if (j.contains("output_path")) c.output_path = get_as<std::string>(j["output_path"], "output_path");
  if (j.contains("output_format")) {
    const auto f = parse_format(get_as<std::string>(j["output_format"], "output_format"));
    if (!f) config_error("output_format must be csv or json");
    c.output_format = *f;
  }
  if (j.contains("timing")) c.timing = get_as<bool>(j["timing"], "timing");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c, int indent) {
  json j;
  j["schema_version"] = c.schema_version;
  j["experiment"] = to_string(c.experiment);
  j["n_atoms"] = c.n_atoms;
  j["r_values"] = c.r_values;
  j["q_values"] = c.q_values;
  if (c.q_grid) {
    j["q_grid"] = json{{"lo", c.q_grid->lo}, {"hi", c.q_grid->hi}, {"n", c.q_grid->n}, {"log", c.q_grid->log}};
  } else {
    j["q_grid"] = nullptr;
  }
  j["r_opt_q_values"] = c.r_opt_q_values;
  j["pp_q_values"] = c.pp_q_values;
  j["n_trajectories"] = c.n_trajectories;
  j["pp_trajectories"] = c.pp_trajectories;
  j["pp_steps"] = c.pp_steps;
  j["master_seed"] = c.master_seed;
  j["engine"] = c.engine ? json(to_string(*c.engine)) : json(nullptr);
  j["output_format"] = to_string(c.output_format);
  j["timing"] = c.timing;
  return j.dump(indent);
}

bool operator==(const SweepRow& a, const SweepRow& b) {
  return a.engine == b.engine && same_double(a.r, b.r) && same_double(a.q_target, b.q_target) &&
         same_double(a.q_measured, b.q_measured) && same_double(a.tau, b.tau) &&
         same_double(a.delta_phi, b.delta_phi) && same_double(a.delta_phi_se, b.delta_phi_se) &&
         same_double(a.delta_phi_atoms_only, b.delta_phi_atoms_only) && same_double(a.qcrb, b.qcrb) &&
         same_double(a.qcrb_se, b.qcrb_se) && a.n_traj == b.n_traj && a.n_diverged == b.n_diverged &&
         same_double(a.wall_time, b.wall_time) && a.series == b.series && a.flags == b.flags;
}

std::span<const std::string_view> sweep_row_fields() { return kRowFields; }

std::string rows_to_csv(std::span<const SweepRow> rows) {
  std::string out;
  for (std::size_t i = 0; i < kRowFields.size(); ++i) {
    if (i) out += ',';
    out += kRowFields[i];
  }
  out += "\r\n";
  for (const SweepRow& r : rows) {
    append_field(out, r.engine);
    for (double v : {r.r, r.q_target, r.q_measured, r.tau, r.delta_phi, r.delta_phi_se, r.delta_phi_atoms_only,
                     r.qcrb, r.qcrb_se}) {
      out += ',';
      append_double(out, v);
    }
    out += ',';
    out += std::to_string(r.n_traj);
    out += ',';
    out += std::to_string(r.n_diverged);
    out += ',';
    append_double(out, r.wall_time);
    out += ',';
    append_field(out, r.series);
    out += ',';
    append_field(out, r.flags);
    out += "\r\n";
  }
  return out;
}

std::vector<SweepRow> rows_from_csv(std::string_view text) {
  const auto records = parse_records(text);
  if (records.empty()) throw Error(ErrorKind::invalid_argument, "CSV has no header");
  const auto& header = records.front();
  if (header.size() != kRowFields.size()) throw Error(ErrorKind::invalid_argument, "CSV header mismatch");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] != kRowFields[i]) throw Error(ErrorKind::invalid_argument, "CSV header mismatch at " + header[i]);
  }
  std::vector<SweepRow> rows;
  for (std::size_t k = 1; k < records.size(); ++k) {
    const auto& f = records[k];
    if (f.size() != kRowFields.size()) {
      throw Error(ErrorKind::invalid_argument, "CSV record " + std::to_string(k) + " has the wrong field count");
    }
    SweepRow r;
    r.engine = f[0];
    r.r = parse_double(f[1]);
    r.q_target = parse_double(f[2]);
    r.q_measured = parse_double(f[3]);
    r.tau = parse_double(f[4]);
    r.delta_phi = parse_double(f[5]);
    r.delta_phi_se = parse_double(f[6]);
    r.delta_phi_atoms_only = parse_double(f[7]);
    r.qcrb = parse_double(f[8]);
    r.qcrb_se = parse_double(f[9]);
    r.n_traj = parse_int(f[10]);
    r.n_diverged = parse_int(f[11]);
    r.wall_time = parse_double(f[12]);
    r.series = f[13];
    r.flags = f[14];
    rows.push_back(std::move(r));
  }
  return rows;
}

bool ValidationReport::all_passed() const {
  for (const ValidationCheck& c : checks) {
    if (!c.passed) return false;
  }
  return !checks.empty();
}

std::string render_meta(const RunResult& result) { return meta_json(result).dump(2) + "\n"; }

std::string render_output(const RunResult& result) {
  if (result.report) {
    if (result.config.output_format == OutputFormat::json) {
      json checks = json::array();
      for (const ValidationCheck& c : result.report->checks) {
        checks.push_back(json{{"name", c.name},
                              {"passed", c.passed},
                              {"measured", number_or_null(c.measured)},
                              {"limit", number_or_null(c.limit)},
                              {"detail", c.detail}});
      }
      return json{{"meta", meta_json(result)}, {"checks", checks}}.dump(2) + "\n";
    }
    std::string out = "name,passed,measured,limit,detail\r\n";
    for (const ValidationCheck& c : result.report->checks) {
      append_field(out, c.name);
      out += c.passed ? ",1," : ",0,";
      append_double(out, c.measured);
      out += ',';
      append_double(out, c.limit);
      out += ',';
      append_field(out, c.detail);
      out += "\r\n";
    }
    return out;
  }
  if (result.config.output_format == OutputFormat::json) {
    json rows = json::array();
    for (const SweepRow& r : result.rows) rows.push_back(row_to_json(r));
    return json{{"meta", meta_json(result)}, {"rows", rows}}.dump(2) + "\n";
  }
  return rows_to_csv(result.rows);
}

}  // namespace squeezelab
