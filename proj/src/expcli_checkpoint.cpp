#include <fstream>
#include <sstream>

#include "semwt/errors.hpp"
#include "semwt/expcli.hpp"
#include "semwt/textio.hpp"

namespace semwt::expcli {

namespace {

constexpr const char* kMagic = "# semwt-checkpoint v1";

void write_tensor(std::ostream& out, const Tensor& t) {
  out << t.shape().size();
  for (std::size_t d : t.shape()) out << " " << d;
  out << " :";
  for (double v : t.vec()) out << " " << format_double_hex(v);
  out << "\n";
}

Tensor read_tensor(std::istream& in) {
  std::size_t rank = 0;
  if (!(in >> rank) || rank > 4) throw IoError("checkpoint: bad tensor rank");
  std::vector<std::size_t> shape(rank);
  std::size_t total = 1;
  for (std::size_t& d : shape) {
    if (!(in >> d)) throw IoError("checkpoint: bad tensor shape");
    total *= d;
  }
  std::string sep;
  if (!(in >> sep) || sep != ":") throw IoError("checkpoint: bad tensor sep");
  std::vector<double> data(total);
  std::string tok;
  for (double& v : data) {
    if (!(in >> tok)) throw IoError("checkpoint: truncated tensor");
    v = parse_double(tok);
  }
  return Tensor(std::move(shape), std::move(data));
}

void write_net(std::ostream& out, const std::string& name,
               const shield::ShieldNet& net) {
  out << "net " << name << " " << static_cast<int>(net.role) << " " << net.rows
      << " " << net.code_dim << " " << net.aux_dim << "\n";
  write_tensor(out, net.weight);
  write_tensor(out, net.bias);
}

shield::ShieldNet read_net(std::istream& in, const std::string& expect_name) {
  std::string tag, name;
  int role = 0;
  shield::ShieldNet net;
  if (!(in >> tag >> name >> role >> net.rows >> net.code_dim >> net.aux_dim) ||
      tag != "net" || name != expect_name) {
    throw IoError("checkpoint: expected net " + expect_name);
  }
  net.role = static_cast<shield::ShieldRole>(role);
  net.weight = read_tensor(in);
  net.bias = read_tensor(in);
  return net;
}

void write_disc(std::ostream& out, const shield::Discriminator& d) {
  out << "disc " << d.in_dim << " " << d.hidden << "\n";
  write_tensor(out, d.w1);
  write_tensor(out, d.b1);
  write_tensor(out, d.w2);
  write_tensor(out, d.b2);
}

shield::Discriminator read_disc(std::istream& in) {
  std::string tag;
  shield::Discriminator d;
  if (!(in >> tag >> d.in_dim >> d.hidden) || tag != "disc") {
    throw IoError("checkpoint: expected disc");
  }
  d.w1 = read_tensor(in);
  d.b1 = read_tensor(in);
  d.w2 = read_tensor(in);
  d.b2 = read_tensor(in);
  return d;
}

void write_spec(std::ostream& out, const std::string& name,
                const toygen::PartitionSpec& spec) {
  out << name << " " << spec.total_codes << " " << spec.code_dim << " "
      << spec.shared_count << " " << spec.private_indices.size();
  for (int i : spec.private_indices) out << " " << i;
  out << "\n";
}

toygen::PartitionSpec read_spec(std::istream& in,
                                const std::string& expect_name) {
  std::string name;
  toygen::PartitionSpec spec;
  std::size_t count = 0;
  if (!(in >> name >> spec.total_codes >> spec.code_dim >> spec.shared_count >>
        count) ||
      name != expect_name) {
    throw IoError("checkpoint: expected " + expect_name);
  }
  spec.private_indices.resize(count);
  for (int& i : spec.private_indices) {
    if (!(in >> i)) throw IoError("checkpoint: truncated partition");
  }
  return spec;
}

void write_models(std::ostream& out, const wiretap::ShieldModels& m,
                  bool with_eve) {
  write_net(out, "protection", m.protection);
  write_net(out, "deprotection", m.deprotection_legit);
  write_disc(out, m.discriminator);
  if (with_eve) {
    if (!m.deprotection_eve) {
      throw IoError("checkpoint: stage-2 models lack an eve net");
    }
    write_net(out, "eve", *m.deprotection_eve);
  }
}

wiretap::ShieldModels read_models(std::istream& in, bool with_eve) {
  wiretap::ShieldModels m;
  m.protection = read_net(in, "protection");
  m.deprotection_legit = read_net(in, "deprotection");
  m.discriminator = read_disc(in);
  if (with_eve) m.deprotection_eve = read_net(in, "eve");
  return m;
}

double read_hex_double(std::istream& in, const std::string& what) {
  std::string tok;
  if (!(in >> tok)) throw IoError("checkpoint: missing " + what);
  return parse_double(tok);
}

}  // namespace

const EpsilonModels& Checkpoint::for_epsilon(double epsilon) const {
  for (const EpsilonModels& m : models) {
    if (m.epsilon == epsilon) return m;
  }
  throw ConfigError("checkpoint has no models for epsilon = " +
                    format_double(epsilon));
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ostringstream out;
  out << kMagic << "\n";
  out << "threat "
      << (ckpt.kind == wiretap::ThreatKind::kBasic ? "basic" : "stronger")
      << "\n";
  out << "gen_seed " << ckpt.gen_seed << "\n";
  out << "obs_dim " << ckpt.obs_dim << "\n";
  write_spec(out, "spec", ckpt.spec);
  if (ckpt.kind == wiretap::ThreatKind::kStronger) {
    write_spec(out, "eve_spec", ckpt.eve_spec);
  }
  out << "bounds " << format_double_hex(ckpt.bounds.lo) << " "
      << format_double_hex(ckpt.bounds.hi) << "\n";
  out << "tau " << format_double_hex(ckpt.tau) << "\n";
  out << "train_snr_db " << format_double_hex(ckpt.train_snr_db) << "\n";
  out << "power " << format_double_hex(ckpt.power) << "\n";
  out << "invert_iters " << ckpt.invert_iters << "\n";
  out << "invert_eta " << format_double_hex(ckpt.invert_eta) << "\n";
  out << "epsilon_count " << ckpt.models.size() << "\n";
  for (const EpsilonModels& m : ckpt.models) {
    out << "epsilon " << format_double_hex(m.epsilon) << "\n";
    out << "mech " << format_double_hex(m.mech.sensitivity) << " "
        << format_double_hex(m.mech.epsilon) << " "
        << format_double_hex(m.mech.scale) << " " << m.mech.element_count
        << "\n";
    out << "stage1\n";
    write_models(out, m.stage1, /*with_eve=*/false);
    out << "stage2 " << (m.stage2 ? 1 : 0) << "\n";
    if (m.stage2) write_models(out, *m.stage2, /*with_eve=*/true);
    out << "denoiser " << (m.denoiser ? 1 : 0) << "\n";
    if (m.denoiser) write_net(out, "denoiser", *m.denoiser);
  }
  out << "end\n";
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write checkpoint: " + path);
  file << out.str();
  if (!file) throw IoError("short write to checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string magic;
  std::getline(in, magic);
  if (magic != kMagic) throw IoError("checkpoint: bad magic line");
  Checkpoint ckpt;
  std::string tag, threat;
  if (!(in >> tag >> threat) || tag != "threat") {
    throw IoError("checkpoint: expected threat");
  }
  if (threat == "basic") ckpt.kind = wiretap::ThreatKind::kBasic;
  else if (threat == "stronger") ckpt.kind = wiretap::ThreatKind::kStronger;
  else throw IoError("checkpoint: unknown threat " + threat);
  if (!(in >> tag >> ckpt.gen_seed) || tag != "gen_seed") {
    throw IoError("checkpoint: expected gen_seed");
  }
  if (!(in >> tag >> ckpt.obs_dim) || tag != "obs_dim") {
    throw IoError("checkpoint: expected obs_dim");
  }
  ckpt.spec = read_spec(in, "spec");
  if (ckpt.kind == wiretap::ThreatKind::kStronger) {
    ckpt.eve_spec = read_spec(in, "eve_spec");
  }
  if (!(in >> tag) || tag != "bounds") {
    throw IoError("checkpoint: expected bounds");
  }
  ckpt.bounds.lo = read_hex_double(in, "bounds.lo");
  ckpt.bounds.hi = read_hex_double(in, "bounds.hi");
  if (!(in >> tag) || tag != "tau") throw IoError("checkpoint: expected tau");
  ckpt.tau = read_hex_double(in, "tau");
  if (!(in >> tag) || tag != "train_snr_db") {
    throw IoError("checkpoint: expected train_snr_db");
  }
  ckpt.train_snr_db = read_hex_double(in, "train_snr_db");
  if (!(in >> tag) || tag != "power") {
    throw IoError("checkpoint: expected power");
  }
  ckpt.power = read_hex_double(in, "power");
  if (!(in >> tag >> ckpt.invert_iters) || tag != "invert_iters") {
    throw IoError("checkpoint: expected invert_iters");
  }
  if (!(in >> tag) || tag != "invert_eta") {
    throw IoError("checkpoint: expected invert_eta");
  }
  ckpt.invert_eta = read_hex_double(in, "invert_eta");
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "epsilon_count") {
    throw IoError("checkpoint: expected epsilon_count");
  }
  ckpt.models.resize(count);
  for (EpsilonModels& m : ckpt.models) {
    if (!(in >> tag) || tag != "epsilon") {
      throw IoError("checkpoint: expected epsilon");
    }
    m.epsilon = read_hex_double(in, "epsilon");
    if (!(in >> tag) || tag != "mech") {
      throw IoError("checkpoint: expected mech");
    }
    m.mech.sensitivity = read_hex_double(in, "mech.sensitivity");
    m.mech.epsilon = read_hex_double(in, "mech.epsilon");
    m.mech.scale = read_hex_double(in, "mech.scale");
    if (!(in >> m.mech.element_count)) {
      throw IoError("checkpoint: expected mech element count");
    }
    if (!(in >> tag) || tag != "stage1") {
      throw IoError("checkpoint: expected stage1");
    }
    m.stage1 = read_models(in, /*with_eve=*/false);
    int flag = 0;
    if (!(in >> tag >> flag) || tag != "stage2") {
      throw IoError("checkpoint: expected stage2");
    }
    if (flag) m.stage2 = read_models(in, /*with_eve=*/true);
    if (!(in >> tag >> flag) || tag != "denoiser") {
      throw IoError("checkpoint: expected denoiser");
    }
    if (flag) m.denoiser = read_net(in, "denoiser");
  }
  if (!(in >> tag) || tag != "end") throw IoError("checkpoint: missing end");
  return ckpt;
}

}  // namespace semwt::expcli
