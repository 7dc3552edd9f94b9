#include "gwlab/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace gwlab {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

ParsedConfig parse_config_text(const std::string& text) {
  ParsedConfig c;
  RunConfig& r = c.run;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) fail("empty key or value");
    c.echo[key] = val;
    auto num = [&]() {
      try {
        size_t pos = 0;
        double v = std::stod(val, &pos);
        if (pos != val.size()) fail("field '" + key + "': not a number: " + val);
        return v;
      } catch (const std::invalid_argument&) {
        fail("field '" + key + "': not a number: " + val);
      }
      return 0.0;
    };
    auto flag = [&]() {
      if (val == "true" || val == "1") return true;
      if (val == "false" || val == "0") return false;
      fail("field '" + key + "': expected true/false");
      return false;
    };
    if (key == "eps") r.eps = num();
    else if (key == "R") r.R = num();
    else if (key == "width") r.width = num();
    else if (key == "delta") r.delta = num();
    else if (key == "sigma") r.sigma = num();
    else if (key == "mu") r.mu = num();
    else if (key == "rho") r.rho = num();
    else if (key == "n_r") r.grid.n_r = int(num());
    else if (key == "n_theta") r.grid.n_theta = int(num());
    else if (key == "r_max") r.grid.r_max = num();
    else if (key == "cfl") r.cfl = num();
    else if (key == "dissipation") r.dissipation = num();
    else if (key == "T_final") r.T_final = num();
    else if (key == "N_d") r.N_d = int(num());
    else if (key == "out_dt") r.out_dt = num();
    else if (key == "track_k") r.track_k = flag();
    else if (key == "track_eikonal") r.track_eikonal = flag();
    else if (key == "store_extract_stream") r.store_extract_stream = flag();
    else if (key == "store_snapshots") r.store_snapshots = flag();
    else if (key == "gauge_mode") {
      if (val == "constructed") r.gauge_mode = GaugeMode::constructed;
      else if (val == "plain_harmonic") r.gauge_mode = GaugeMode::plain_harmonic;
      else fail("field 'gauge_mode': constructed or plain_harmonic");
    } else if (key == "gl_multiplier") {
      if (val == "curvature_matched") r.gl_mult = GlMultiplier::curvature_matched;
      else if (val == "d2q_qchi") r.gl_mult = GlMultiplier::d2q_qchi;
      else if (val == "chi_prime") r.gl_mult = GlMultiplier::chi_prime;
      else fail("field 'gl_multiplier': curvature_matched, d2q_qchi or chi_prime");
    } else if (key == "bprofile_file") c.bprofile_file = val;
    else if (key == "out_dir") c.out_dir = val;
    else fail("unknown field '" + key + "'");
  }
  try {
    r.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config validation: ") + e.what());
  }
  return c;
}

ParsedConfig parse_config_file(const std::string& path) {
  return parse_config_text(read_file(path));
}

std::string config_echo_text(const ParsedConfig& c) {
  const RunConfig& r = c.run;
  std::ostringstream os;
  os.precision(17);
  os << "eps = " << r.eps << "\nR = " << r.R << "\nwidth = " << r.width
     << "\ndelta = " << r.delta << "\nsigma = " << r.sigma << "\nmu = " << r.mu
     << "\nrho = " << r.rho << "\nn_r = " << r.grid.n_r << "\nn_theta = " << r.grid.n_theta
     << "\nr_max = " << r.grid.r_max << "\ncfl = " << r.cfl
     << "\ndissipation = " << r.dissipation << "\nT_final = " << r.T_final
     << "\nN_d = " << r.N_d << "\nout_dt = " << r.out_dt << "\ngauge_mode = "
     << (r.gauge_mode == GaugeMode::constructed ? "constructed" : "plain_harmonic")
     << "\ngl_multiplier = "
     << (r.gl_mult == GlMultiplier::curvature_matched
             ? "curvature_matched"
             : (r.gl_mult == GlMultiplier::d2q_qchi ? "d2q_qchi" : "chi_prime"))
     << "\ntrack_k = " << (r.track_k ? "true" : "false")
     << "\ntrack_eikonal = " << (r.track_eikonal ? "true" : "false")
     << "\nstore_extract_stream = " << (r.store_extract_stream ? "true" : "false")
     << "\nstore_snapshots = " << (r.store_snapshots ? "true" : "false")
     << "\nout_dir = " << c.out_dir << "\n";
  if (!c.bprofile_file.empty()) os << "bprofile_file = " << c.bprofile_file << "\n";
  return os.str();
}

void write_manifest(const std::string& dir, const ParsedConfig& cfg,
                    const std::vector<std::string>& files) {
  std::ostringstream os;
  os << "# run manifest\nversion = " << kVersion << "\n\n[config]\n"
     << config_echo_text(cfg) << "\n[outputs]\n";
  for (const auto& f : files) {
    std::string data = read_file(dir + "/" + f);
    os << f << " bytes=" << data.size() << " fnv1a=" << std::hex
       << fnv1a(data.data(), data.size()) << std::dec << "\n";
  }
  write_file(dir + "/manifest.txt", os.str());
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

}  // namespace gwlab
