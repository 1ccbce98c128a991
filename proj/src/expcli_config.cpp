#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "semwt/errors.hpp"
#include "semwt/expcli.hpp"
#include "semwt/textio.hpp"

namespace semwt::expcli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

std::uint64_t parse_u64(const std::string& s) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw ConfigError("trailing characters in: " + s);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("not an unsigned integer: " + s);
  }
}

int parse_int(const std::string& s) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw ConfigError("trailing characters in: " + s);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("not an integer: " + s);
  }
}

double parse_cfg_double(const std::string& s) {
  try {
    return parse_double(s);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("expected true or false, got: " + s);
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const std::string& item : split_commas(s)) {
    out.push_back(parse_cfg_double(item));
  }
  if (out.empty()) throw ConfigError("empty list value");
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const std::string& item : split_commas(s)) out.push_back(parse_int(item));
  if (out.empty()) throw ConfigError("empty list value");
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

toygen::PartitionSpec ExperimentConfig::partition() const {
  toygen::PartitionSpec spec;
  spec.total_codes = total_codes;
  spec.code_dim = code_dim;
  spec.shared_count = shared_count;
  spec.private_indices = private_indices;
  return spec;
}

toygen::PartitionSpec ExperimentConfig::eve_partition() const {
  toygen::PartitionSpec spec = partition();
  spec.private_indices = eve_guess_indices;
  return spec;
}

wiretap::ThreatKind ExperimentConfig::threat_kind() const {
  if (threat == "basic") return wiretap::ThreatKind::kBasic;
  if (threat == "stronger") return wiretap::ThreatKind::kStronger;
  throw ConfigError("threat must be basic or stronger, got: " + threat);
}

shield::TrainerConfig ExperimentConfig::trainer_config() const {
  shield::TrainerConfig t;
  t.batch_size = batch_size;
  t.lambda = lambda;
  t.legit_lr = legit_lr;
  t.disc_lr = disc_lr;
  t.eve_lr = eve_lr;
  t.momentum = momentum;
  t.disc_steps = disc_steps;
  t.sched_period0 = sched_period0;
  t.sched_mult = sched_mult;
  t.train_snr_db = train_snr_db;
  t.power = power;
  t.seed = seed;
  return t;
}

void ExperimentConfig::validate() const {
  (void)threat_kind();
  partition().validate();
  if (threat == "stronger") eve_partition().validate();
  if (obs_dim <= 0 || obs_dim % partition().group_count() != 0) {
    throw ConfigError("obs_dim must be a positive multiple of the group count");
  }
  if (train_count < 1 || test_count < 1) {
    throw ConfigError("dataset sizes must be >= 1");
  }
  for (double e : epsilon_grid) {
    if (e <= 0.0) throw ConfigError("epsilon values must be > 0");
  }
  if (!(clip_lo_quantile < clip_hi_quantile) || clip_lo_quantile < 0.0 ||
      clip_hi_quantile > 1.0) {
    throw ConfigError("clip quantiles must satisfy 0 <= lo < hi <= 1");
  }
  if (stage1_epochs < 1 || stage2_epochs < 1 || batch_size < 1) {
    throw ConfigError("epochs and batch size must be >= 1");
  }
  if (power <= 0.0) throw ConfigError("power must be > 0");
  if (invert_iters < 1) throw ConfigError("invert_iters must be >= 1");
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
  return emit_config(*this) == emit_config(other);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  bool explicit_private = false;
  bool explicit_stage2 = false;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    }
    if (key == "seed") cfg.seed = parse_u64(value);
    else if (key == "total_codes") cfg.total_codes = parse_int(value);
    else if (key == "code_dim") cfg.code_dim = parse_int(value);
    else if (key == "obs_dim") cfg.obs_dim = parse_int(value);
    else if (key == "shared_count") cfg.shared_count = parse_int(value);
    else if (key == "train_count") cfg.train_count = parse_int(value);
    else if (key == "test_count") cfg.test_count = parse_int(value);
    else if (key == "epsilon_grid") cfg.epsilon_grid = parse_double_list(value);
    else if (key == "snr_grid_db") cfg.snr_grid_db = parse_double_list(value);
    else if (key == "lambda") cfg.lambda = parse_cfg_double(value);
    else if (key == "batch_size") cfg.batch_size = parse_int(value);
    else if (key == "legit_lr") cfg.legit_lr = parse_cfg_double(value);
    else if (key == "disc_lr") cfg.disc_lr = parse_cfg_double(value);
    else if (key == "eve_lr") cfg.eve_lr = parse_cfg_double(value);
    else if (key == "momentum") cfg.momentum = parse_cfg_double(value);
    else if (key == "disc_steps") cfg.disc_steps = parse_int(value);
    else if (key == "sched_period0") cfg.sched_period0 = parse_int(value);
    else if (key == "sched_mult") cfg.sched_mult = parse_int(value);
    else if (key == "stage1_epochs") cfg.stage1_epochs = parse_int(value);
    else if (key == "stage2_epochs") {
      cfg.stage2_epochs = parse_int(value);
      explicit_stage2 = true;
    } else if (key == "train_snr_db") cfg.train_snr_db = parse_cfg_double(value);
    else if (key == "power") cfg.power = parse_cfg_double(value);
    else if (key == "threat") cfg.threat = value;
    else if (key == "private_indices") {
      cfg.private_indices = parse_int_list(value);
      explicit_private = true;
    } else if (key == "eve_guess_indices") {
      cfg.eve_guess_indices = parse_int_list(value);
    } else if (key == "clip_lo_quantile") {
      cfg.clip_lo_quantile = parse_cfg_double(value);
    } else if (key == "clip_hi_quantile") {
      cfg.clip_hi_quantile = parse_cfg_double(value);
    } else if (key == "invert_iters") cfg.invert_iters = parse_int(value);
    else if (key == "invert_eta") cfg.invert_eta = parse_cfg_double(value);
    else if (key == "tau_quantile") cfg.tau_quantile = parse_cfg_double(value);
    else if (key == "run_direct") cfg.run_direct = parse_bool(value);
    else if (key == "run_traditional_dp") {
      cfg.run_traditional_dp = parse_bool(value);
    } else if (key == "out_dir") cfg.out_dir = value;
    else throw ConfigError("unknown config key: " + key);
  }
  // Preset: the stronger threat widens the true private set unless the user
  // pinned one explicitly.
  if (cfg.threat == "stronger" && !explicit_private) {
    cfg.private_indices = {0, 1, 4, 5, 6, 7};
  }
  // Stage-2 epochs default to half of stage 1.
  if (!explicit_stage2) cfg.stage2_epochs = std::max(1, cfg.stage1_epochs / 2);
  cfg.validate();
  return cfg;
}

std::string emit_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "seed = " << cfg.seed << "\n";
  out << "total_codes = " << cfg.total_codes << "\n";
  out << "code_dim = " << cfg.code_dim << "\n";
  out << "obs_dim = " << cfg.obs_dim << "\n";
  out << "shared_count = " << cfg.shared_count << "\n";
  out << "train_count = " << cfg.train_count << "\n";
  out << "test_count = " << cfg.test_count << "\n";
  out << "epsilon_grid = " << join_doubles(cfg.epsilon_grid) << "\n";
  out << "snr_grid_db = " << join_doubles(cfg.snr_grid_db) << "\n";
  out << "lambda = " << format_double(cfg.lambda) << "\n";
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "legit_lr = " << format_double(cfg.legit_lr) << "\n";
  out << "disc_lr = " << format_double(cfg.disc_lr) << "\n";
  out << "eve_lr = " << format_double(cfg.eve_lr) << "\n";
  out << "momentum = " << format_double(cfg.momentum) << "\n";
  out << "disc_steps = " << cfg.disc_steps << "\n";
  out << "sched_period0 = " << cfg.sched_period0 << "\n";
  out << "sched_mult = " << cfg.sched_mult << "\n";
  out << "stage1_epochs = " << cfg.stage1_epochs << "\n";
  out << "stage2_epochs = " << cfg.stage2_epochs << "\n";
  out << "train_snr_db = " << format_double(cfg.train_snr_db) << "\n";
  out << "power = " << format_double(cfg.power) << "\n";
  out << "threat = " << cfg.threat << "\n";
  out << "private_indices = " << join_ints(cfg.private_indices) << "\n";
  out << "eve_guess_indices = " << join_ints(cfg.eve_guess_indices) << "\n";
  out << "clip_lo_quantile = " << format_double(cfg.clip_lo_quantile) << "\n";
  out << "clip_hi_quantile = " << format_double(cfg.clip_hi_quantile) << "\n";
  out << "invert_iters = " << cfg.invert_iters << "\n";
  out << "invert_eta = " << format_double(cfg.invert_eta) << "\n";
  out << "tau_quantile = " << format_double(cfg.tau_quantile) << "\n";
  out << "run_direct = " << (cfg.run_direct ? "true" : "false") << "\n";
  out << "run_traditional_dp = " << (cfg.run_traditional_dp ? "true" : "false")
      << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  return out.str();
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace semwt::expcli
