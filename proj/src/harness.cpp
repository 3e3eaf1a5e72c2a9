#include "ezag/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "ezag/oracles.hpp"

namespace ezag {

namespace {

constexpr const char* kVersion = "ezag-sim 1.0.0";
constexpr int kDeskCap = 1000;
constexpr uint64_t kWorldSalt = 0x776f726c64ull;  // world-seed derivation

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not an integer: '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not an unsigned integer: '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not a number: '" + v + "'");
  }
}

}  // namespace

const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Walk: return "walk";
    case ExperimentKind::LinkRate: return "linkrate";
    case ExperimentKind::Hier: return "hier";
    case ExperimentKind::Gossip: return "gossip";
  }
  return "?";
}

bool parse_experiment_kind(const std::string& name, ExperimentKind& out) {
  if (name == "walk") out = ExperimentKind::Walk;
  else if (name == "linkrate") out = ExperimentKind::LinkRate;
  else if (name == "hier") out = ExperimentKind::Hier;
  else if (name == "gossip") out = ExperimentKind::Gossip;
  else return false;
  return true;
}

void ExperimentSpec::validate() const {
  if (name.empty()) throw ConfigError("name must be nonempty");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (n_list.empty()) throw ConfigError("n list must be nonempty");
  for (int n : n_list)
    if (n < 1) throw ConfigError("every n must be >= 1");
  if (kind == ExperimentKind::Walk && protocols.empty())
    throw ConfigError("protocols must be nonempty");
  if (models.empty()) throw ConfigError("models must be nonempty");
  if (speeds.empty()) throw ConfigError("speeds must be nonempty");
  for (double s : speeds)
    if (!(s > 0.0)) throw ConfigError("every speed must be > 0");
  if (!(density > 0.0)) throw ConfigError("density must be > 0");
  if (!(degree_factor > 0.0)) throw ConfigError("degree_factor must be > 0");
  if (gray_range_factor < 1.0)
    throw ConfigError("gray_range_factor must be >= 1");
  if (delta < 1) throw ConfigError("delta must be >= 1");
  if (refresh_cycles < 1) throw ConfigError("refresh_cycles must be >= 1");
  if (loss < 0.0 || loss >= 1.0) throw ConfigError("loss must be in [0, 1)");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be > 0");
}

std::string ExperimentSpec::serialize() const {
  std::string s;
  s += "kind = ";
  s += to_string(kind);
  s += "\nprotocols = ";
  for (size_t i = 0; i < protocols.size(); ++i)
    s += std::string(i ? "," : "") + to_string(protocols[i]);
  s += "\nn = ";
  for (size_t i = 0; i < n_list.size(); ++i)
    s += (i ? "," : "") + std::to_string(n_list[i]);
  s += "\nmodels = ";
  for (size_t i = 0; i < models.size(); ++i)
    s += std::string(i ? "," : "") + to_string(models[i]);
  s += "\nspeeds = ";
  for (size_t i = 0; i < speeds.size(); ++i)
    s += (i ? "," : "") + fmt_double(speeds[i]);
  s += "\ntrials = " + std::to_string(trials);
  s += "\nseed = " + std::to_string(base_seed);
  s += "\nmode = ";
  s += mode == RunMode::CoverageOracle ? "oracle" : "terminate-after-n";
  s += "\ndensity = " + fmt_double(density);
  s += "\ndegree_factor = " + fmt_double(degree_factor);
  s += "\ngray_range_factor = " + fmt_double(gray_range_factor);
  s += "\ndelta = " + std::to_string(delta);
  s += "\nrefresh_cycles = " + std::to_string(refresh_cycles);
  s += "\nloss = " + fmt_double(loss);
  s += "\nhorizon = " + fmt_double(horizon);
  s += "\naggregate = ";
  s += aggregate == SynopsisKind::Max ? "max"
       : aggregate == SynopsisKind::Min ? "min"
                                        : "count";
  s += "\ngossip_exponent = " + fmt_double(gossip_exponent);
  s += "\n";
  return s;
}

ExperimentSpec parse_spec_text(const std::string& text, const std::string& name) {
  ExperimentSpec spec;
  spec.name = name;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "kind") {
      if (!parse_experiment_kind(value, spec.kind))
        throw ConfigError("key 'kind': unknown kind '" + value + "'");
    } else if (key == "name") {
      spec.name = value;
    } else if (key == "protocols" || key == "protocol") {
      spec.protocols.clear();
      for (const std::string& p : split_list(value)) {
        Protocol proto;
        if (!parse_protocol(p, proto))
          throw ConfigError("key 'protocols': unknown protocol '" + p + "'");
        spec.protocols.push_back(proto);
      }
    } else if (key == "n") {
      spec.n_list.clear();
      for (const std::string& v : split_list(value))
        spec.n_list.push_back(parse_int(key, v));
    } else if (key == "models" || key == "model") {
      spec.models.clear();
      for (const std::string& m : split_list(value)) {
        MobilityModel model;
        if (!parse_mobility_model(m, model))
          throw ConfigError("key 'models': unknown model '" + m + "'");
        spec.models.push_back(model);
      }
    } else if (key == "speeds" || key == "speed") {
      spec.speeds.clear();
      for (const std::string& v : split_list(value))
        spec.speeds.push_back(parse_double(key, v));
    } else if (key == "trials") {
      spec.trials = parse_int(key, value);
    } else if (key == "seed") {
      spec.base_seed = parse_u64(key, value);
    } else if (key == "mode") {
      if (value == "oracle") spec.mode = RunMode::CoverageOracle;
      else if (value == "terminate-after-n" || value == "terminate_after_n")
        spec.mode = RunMode::TerminateAfterN;
      else
        throw ConfigError("key 'mode': expected oracle or terminate-after-n, got '" +
                          value + "'");
    } else if (key == "density") {
      spec.density = parse_double(key, value);
    } else if (key == "degree_factor") {
      spec.degree_factor = parse_double(key, value);
    } else if (key == "gray_range_factor") {
      spec.gray_range_factor = parse_double(key, value);
    } else if (key == "delta") {
      spec.delta = parse_int(key, value);
    } else if (key == "refresh_cycles") {
      spec.refresh_cycles = parse_int(key, value);
    } else if (key == "loss") {
      spec.loss = parse_double(key, value);
    } else if (key == "horizon") {
      spec.horizon = parse_double(key, value);
    } else if (key == "aggregate") {
      if (value == "max") spec.aggregate = SynopsisKind::Max;
      else if (value == "min") spec.aggregate = SynopsisKind::Min;
      else if (value == "count") spec.aggregate = SynopsisKind::CountSketch;
      else
        throw ConfigError("key 'aggregate': expected max, min or count, got '" + value +
                          "'");
    } else if (key == "gossip_exponent") {
      spec.gossip_exponent = parse_double(key, value);
    } else if (key == "out") {
      spec.out = value;
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  return spec;
}

ExperimentSpec load_spec_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read spec file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::string stem = std::filesystem::path(path).stem().string();
  return parse_spec_text(buf.str(), stem);
}

namespace {

ExperimentSpec make_builtin(const std::string& name) {
  ExperimentSpec s;
  s.name = name;
  if (name == "smoke") {
    s.protocols = {Protocol::Ezag, Protocol::Srrw};
    s.n_list = {100};
    s.trials = 3;
    s.base_seed = 7;
  } else if (name == "fig2a") {
    s.protocols = {Protocol::Srrw};
    s.n_list = {100, 200, 400, 500, 800, 1000};
    s.trials = 20;
    s.base_seed = 11;
  } else if (name == "fig2b") {
    s.protocols = {Protocol::Srrw, Protocol::Ezag};
    s.n_list = {100, 200, 400, 500, 800, 1000};
    s.models = {MobilityModel::RandomWaypoint};
    s.speeds = {6};
    s.trials = 50;
    s.base_seed = 21;
  } else if (name == "fig3a") {
    s.protocols = {Protocol::Ezag};
    s.n_list = {500};
    s.models = {MobilityModel::RandomDirection, MobilityModel::RandomWaypoint,
                MobilityModel::GaussMarkov};
    s.trials = 30;
    s.base_seed = 31;
  } else if (name == "fig4") {
    s.protocols = {Protocol::Ezag};
    s.n_list = {500};
    s.speeds = {3, 9, 15, 21};
    s.trials = 30;
    s.base_seed = 41;
  } else if (name == "fig5a") {
    s.protocols = {Protocol::Ezag};
    s.n_list = {100, 200, 400, 800};
    s.trials = 20;
    s.base_seed = 51;
  } else if (name == "fig6a") {
    s.protocols = {Protocol::Tree, Protocol::Ezag};
    s.n_list = {100, 200, 400, 800};
    s.models = {MobilityModel::Static};
    s.loss = 0.1;  // collision stand-in; the tree contrast is contention-driven
    s.trials = 10;
    s.base_seed = 61;
  } else if (name == "fig7") {
    s.protocols = {Protocol::Tree, Protocol::Ezag};
    s.n_list = {100, 200, 400, 800};
    s.speeds = {15};
    s.loss = 0.1;
    s.trials = 10;
    s.base_seed = 71;
  } else if (name == "table1") {
    s.kind = ExperimentKind::LinkRate;
    s.n_list = {100, 200, 300, 500, 1000, 2000, 4000};
    s.speeds = {3, 9, 15, 21};
    s.trials = 5;
    s.base_seed = 81;
  } else if (name == "variance") {
    s.protocols = {Protocol::Srrw};
    s.n_list = {100, 400, 1000};
    s.trials = 20;
    s.base_seed = 91;
  } else if (name == "term500") {
    s.protocols = {Protocol::Ezag};
    s.n_list = {500};
    s.models = {MobilityModel::RandomWaypoint};
    s.speeds = {6};
    s.trials = 50;
    s.mode = RunMode::TerminateAfterN;
    s.base_seed = 101;
  } else if (name == "plain500") {
    s.protocols = {Protocol::PlainRw, Protocol::Srrw};
    s.n_list = {500};
    s.models = {MobilityModel::Static};
    s.trials = 20;
    s.horizon = 3600;
    s.base_seed = 111;
  } else if (name == "hier1024") {
    s.kind = ExperimentKind::Hier;
    s.n_list = {256, 1024};
    s.models = {MobilityModel::Static};
    s.trials = 5;
    s.base_seed = 121;
  } else if (name == "hier4096") {
    s.kind = ExperimentKind::Hier;
    s.n_list = {256, 1024, 4096};
    s.models = {MobilityModel::Static};
    s.trials = 3;
    s.base_seed = 131;
  } else if (name == "gossip") {
    s.kind = ExperimentKind::Gossip;
    s.n_list = {16, 64, 256, 1024, 4096};
    s.trials = 1;
    s.base_seed = 141;
  } else {
    s.name.clear();  // signals "no such builtin"
  }
  return s;
}

const char* kBuiltinNames[] = {"smoke",  "fig2a",    "fig2b",    "fig3a",    "fig4",
                               "fig5a",  "fig6a",    "fig7",     "table1",   "variance",
                               "term500", "plain500", "hier1024", "hier4096", "gossip"};

}  // namespace

std::vector<std::string> builtin_spec_names() {
  return {std::begin(kBuiltinNames), std::end(kBuiltinNames)};
}

bool find_builtin_spec(const std::string& name, ExperimentSpec& out) {
  ExperimentSpec s = make_builtin(name);
  if (s.name.empty()) return false;
  out = std::move(s);
  return true;
}

ExperimentSpec resolve_spec(const std::string& ref) {
  if (std::filesystem::exists(ref)) return load_spec_file(ref);
  ExperimentSpec s;
  if (find_builtin_spec(ref, s)) return s;
  throw ConfigError("no spec file or built-in spec named '" + ref + "'");
}

// --- single runs -------------------------------------------------------------

World make_walk_world(int n, double density, double degree_factor, uint64_t seed) {
  const double log_n = std::log(static_cast<double>(std::max(n, 2)));
  WorldConfig cfg =
      WorldConfig::with_mean_degree(n, density, degree_factor * log_n, seed);
  return build_connected_world(cfg);
}

World make_hier_world(int n, int delta, double density, uint64_t seed) {
  WorldConfig cfg = WorldConfig::with_cell_population(n, density, delta, seed);
  return build_connected_world(cfg);
}

TrialStats run_walk_trial(const CellSpec& cell, uint64_t seed) {
  World world =
      make_walk_world(cell.n, cell.density, cell.degree_factor, splitmix64(seed ^ kWorldSalt));
  const MobilityConfig mob = MobilityConfig::make(cell.model, cell.speed);
  MediumConfig med;
  med.loss_probability = cell.loss;
  med.gray_range_factor = cell.gray_range_factor;
  if (cell.protocol == Protocol::Tree) {
    TreeOptions opt;
    opt.horizon = cell.horizon;
    opt.aggregate = cell.aggregate;
    return run_tree(std::move(world), mob, opt, med, seed);
  }
  EzagOptions opt;
  opt.mode = cell.mode;
  opt.horizon = cell.horizon;
  opt.aggregate = cell.aggregate;
  switch (cell.protocol) {
    case Protocol::Ezag: return run_ezag(std::move(world), mob, opt, med, seed);
    case Protocol::Srrw: return run_srrw(std::move(world), mob, opt, med, seed);
    default: return run_plain_rw(std::move(world), mob, opt, med, seed);
  }
}

std::vector<TrialStats> run_walk_cell(const CellSpec& cell, int trials, uint64_t seed0,
                                      int jobs) {
  std::vector<TrialStats> out(static_cast<size_t>(trials));
  parallel_for(trials, jobs,
               [&](int t) { out[static_cast<size_t>(t)] = run_walk_trial(cell, seed0 + t); });
  return out;
}

double link_rate_trial(int n, double density, double degree_factor, double speed,
                       uint64_t seed) {
  World world = make_walk_world(n, density, degree_factor, splitmix64(seed ^ kWorldSalt));
  const MobilityConfig mob_cfg =
      MobilityConfig::make(MobilityModel::RandomDirection, speed);
  Mobility mobility(mob_cfg, splitmix64(seed ^ 0x6d6f6269ull));
  mobility.init(world);
  world.refresh_index();
  const double dt = 0.1;
  const int warmup_steps = 200, observe_seconds = 50;
  for (int i = 0; i < warmup_steps; ++i) mobility.step(world, dt);
  LinkChangeMeter meter;
  meter.observe(world);
  for (int s = 0; s < observe_seconds; ++s) {
    for (int i = 0; i < 10; ++i) mobility.step(world, dt);
    meter.observe(world);
  }
  return meter.rate(1.0);
}

HierStats run_hier_trial(int n, int delta, double density, double gray_range_factor,
                         MobilityModel model, double speed, int refresh_cycles, double loss,
                         uint64_t seed) {
  World world = make_hier_world(n, delta, density, splitmix64(seed ^ kWorldSalt));
  const MobilityConfig mob = MobilityConfig::make(model, speed);
  HierarchyConfig cfg;
  cfg.delta = delta;
  cfg.refresh_cycles = refresh_cycles;
  MediumConfig med;
  med.loss_probability = loss;
  med.gray_range_factor = gray_range_factor;
  return run_hier(std::move(world), mob, cfg, med, seed);
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(jobs));
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// --- experiment runner -------------------------------------------------------

std::string default_out_dir() {
  if (const char* env = std::getenv("EZAG_OUT_DIR"); env && *env) return env;
  return "out";
}

namespace {

struct WalkJob {
  CellSpec cell;
  uint64_t seed = 0;
  int cell_index = 0;
};

std::string walk_summary_header() {
  return "protocol,n,mobility,speed,trials,complete_rate,median_overhead_full,"
         "q1_overhead_full,q3_overhead_full,median_overhead_85,"
         "frac_overhead_full_lt_1,median_total_msgs,msgs_per_node,median_transfers,"
         "median_visit_variance,median_max_visits,mean_requests_per_transfer,"
         "median_completion_time\n";
}

std::string walk_summary_row(const CellSpec& cell, const std::vector<TrialStats>& runs) {
  const size_t t = runs.size();
  std::vector<double> ov_full, ov_85, totals, transfers, variances, maxv, comp;
  double complete = 0.0, lt1 = 0.0, req_sum = 0.0;
  int req_count = 0;
  for (const TrialStats& s : runs) {
    const double of = exploration_overhead(s, 1.0);
    ov_full.push_back(of);
    ov_85.push_back(exploration_overhead(s, 0.85));
    totals.push_back(static_cast<double>(s.total()));
    transfers.push_back(static_cast<double>(s.transfers));
    variances.push_back(visit_variance(s.visits));
    maxv.push_back(static_cast<double>(s.max_visits()));
    comp.push_back(s.completion_time);
    if (s.complete) complete += 1.0;
    if (of < 1.0) lt1 += 1.0;  // NaN compares false
    if (s.transfers > 0) {
      req_sum += s.requests_per_transfer();
      ++req_count;
    }
  }
  const double tn = static_cast<double>(t);
  const double med_total = quantile(totals, 0.5);
  std::string row;
  row += to_string(cell.protocol);
  row += ',' + std::to_string(cell.n);
  row += ',';
  row += to_string(cell.model);
  row += ',' + fmt_double(cell.speed);
  row += ',' + std::to_string(t);
  row += ',' + fmt_double(complete / tn);
  row += ',' + fmt_double(quantile(ov_full, 0.5));
  row += ',' + fmt_double(quantile(ov_full, 0.25));
  row += ',' + fmt_double(quantile(ov_full, 0.75));
  row += ',' + fmt_double(quantile(ov_85, 0.5));
  row += ',' + fmt_double(lt1 / tn);
  row += ',' + fmt_double(med_total);
  row += ',' + fmt_double(med_total / cell.n);
  row += ',' + fmt_double(quantile(transfers, 0.5));
  row += ',' + fmt_double(quantile(variances, 0.5));
  row += ',' + fmt_double(quantile(maxv, 0.5));
  row += ',' + fmt_double(req_count > 0 ? req_sum / req_count : 0.0);
  row += ',' + fmt_double(quantile(comp, 0.5));
  row += '\n';
  return row;
}

struct OpenFile {
  std::string path;
  std::ofstream stream;
};

OpenFile open_for_write(const std::filesystem::path& dir, const std::string& file) {
  OpenFile f;
  f.path = (dir / file).string();
  f.stream.open(f.path, std::ios::binary | std::ios::trunc);
  if (!f.stream) throw std::runtime_error("cannot write output file '" + f.path + "'");
  return f;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec_in, const RunOverrides& ov) {
  ExperimentSpec spec = spec_in;
  if (ov.trials > 0) spec.trials = ov.trials;
  if (ov.has_seed) spec.base_seed = ov.seed;
  if (!ov.out.empty()) spec.out = ov.out;

  std::vector<int> dropped;
  if (spec.kind != ExperimentKind::Gossip && !ov.full) {
    std::vector<int> kept;
    for (int n : spec.n_list)
      (n <= kDeskCap ? kept : dropped).push_back(n);
    if (kept.empty())
      throw ConfigError("all n points exceed the desk-scale cap of " +
                        std::to_string(kDeskCap) + "; pass --full");
    spec.n_list = std::move(kept);
  }
  spec.validate();

  ExperimentResult result;
  result.spec = spec;
  result.out_dir = !spec.out.empty() ? spec.out : default_out_dir();

  const std::filesystem::path dir(result.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory '" + result.out_dir +
                             "': " + ec.message());

  // All output files are opened (and truncated) before any simulation starts.
  OpenFile trials_f = open_for_write(dir, spec.name + "_trials.csv");
  OpenFile summary_f = open_for_write(dir, spec.name + "_summary.csv");
  OpenFile manifest_f = open_for_write(dir, spec.name + "_manifest.txt");
  OpenFile stamp_f = open_for_write(dir, spec.name + "_runstamp.txt");
  result.files = {trials_f.path, summary_f.path, manifest_f.path, stamp_f.path};

  std::string trials_body, summary_body;

  if (spec.kind == ExperimentKind::Walk) {
    std::vector<WalkJob> jobs;
    std::vector<CellSpec> cells;
    for (Protocol proto : spec.protocols) {
      for (int n : spec.n_list) {
        for (MobilityModel model : spec.models) {
          const std::vector<double> cell_speeds =
              model == MobilityModel::Static ? std::vector<double>{0.0} : spec.speeds;
          for (double speed : cell_speeds) {
            CellSpec cell;
            cell.protocol = proto;
            cell.n = n;
            cell.model = model;
            cell.speed = speed;
            cell.mode = spec.mode;
            cell.density = spec.density;
            cell.degree_factor = spec.degree_factor;
            cell.gray_range_factor = spec.gray_range_factor;
            cell.loss = spec.loss;
            cell.horizon = spec.horizon;
            cell.aggregate = spec.aggregate;
            const int cell_index = static_cast<int>(cells.size());
            cells.push_back(cell);
            for (int t = 0; t < spec.trials; ++t) {
              WalkJob job;
              job.cell = cell;
              job.seed = spec.base_seed + jobs.size();
              job.cell_index = cell_index;
              jobs.push_back(job);
            }
          }
        }
      }
    }
    result.walk_trials.resize(jobs.size());
    parallel_for(static_cast<int>(jobs.size()), ov.jobs, [&](int i) {
      result.walk_trials[static_cast<size_t>(i)] =
          run_walk_trial(jobs[static_cast<size_t>(i)].cell, jobs[static_cast<size_t>(i)].seed);
    });
    trials_body = trial_csv_header() + "\n";
    for (const TrialStats& s : result.walk_trials) trials_body += trial_csv_row(s) + "\n";
    summary_body = walk_summary_header();
    for (size_t c = 0; c < cells.size(); ++c) {
      const std::vector<TrialStats> runs(
          result.walk_trials.begin() + static_cast<long>(c) * spec.trials,
          result.walk_trials.begin() + static_cast<long>(c + 1) * spec.trials);
      summary_body += walk_summary_row(cells[c], runs);
    }
  } else if (spec.kind == ExperimentKind::LinkRate) {
    struct RateJob {
      int n;
      double speed;
      uint64_t seed;
    };
    std::vector<RateJob> jobs;
    for (int n : spec.n_list)
      for (double speed : spec.speeds)
        for (int t = 0; t < spec.trials; ++t)
          jobs.push_back({n, speed, spec.base_seed + jobs.size()});
    std::vector<double> rates(jobs.size());
    parallel_for(static_cast<int>(jobs.size()), ov.jobs, [&](int i) {
      const RateJob& j = jobs[static_cast<size_t>(i)];
      rates[static_cast<size_t>(i)] =
          link_rate_trial(j.n, spec.density, spec.degree_factor, j.speed, j.seed);
    });
    trials_body = "n,speed,seed,rate\n";
    for (size_t i = 0; i < jobs.size(); ++i) {
      trials_body += std::to_string(jobs[i].n) + ',' + fmt_double(jobs[i].speed) + ',' +
                     std::to_string(jobs[i].seed) + ',' + fmt_double(rates[i]) + '\n';
    }
    summary_body = "n,speed,trials,median_rate,mean_rate\n";
    size_t idx = 0;
    for (int n : spec.n_list) {
      for (double speed : spec.speeds) {
        std::vector<double> cell(rates.begin() + static_cast<long>(idx),
                                 rates.begin() + static_cast<long>(idx + spec.trials));
        idx += static_cast<size_t>(spec.trials);
        double mean = 0.0;
        for (double r : cell) mean += r;
        mean /= static_cast<double>(cell.size());
        summary_body += std::to_string(n) + ',' + fmt_double(speed) + ',' +
                        std::to_string(spec.trials) + ',' +
                        fmt_double(quantile(cell, 0.5)) + ',' + fmt_double(mean) + '\n';
      }
    }
  } else if (spec.kind == ExperimentKind::Hier) {
    OpenFile levels_f = open_for_write(dir, spec.name + "_levels.csv");
    result.files.insert(result.files.begin() + 2, levels_f.path);
    struct HierJob {
      int n;
      uint64_t seed;
    };
    std::vector<HierJob> jobs;
    for (int n : spec.n_list)
      for (int t = 0; t < spec.trials; ++t) jobs.push_back({n, spec.base_seed + jobs.size()});
    result.hier_trials.resize(jobs.size());
    const MobilityModel model = spec.models.front();
    const double speed = spec.speeds.front();
    parallel_for(static_cast<int>(jobs.size()), ov.jobs, [&](int i) {
      const HierJob& j = jobs[static_cast<size_t>(i)];
      result.hier_trials[static_cast<size_t>(i)] =
          run_hier_trial(j.n, spec.delta, spec.density, spec.gray_range_factor, model, speed,
                         spec.refresh_cycles, spec.loss, j.seed);
    });
    trials_body = "seed,n,delta,levels,complete,total_msgs,completion_time,msgs_per_node_level\n";
    std::string levels_body = hier_csv_header() + "\n";
    for (const HierStats& h : result.hier_trials) {
      const double c_norm =
          static_cast<double>(h.total_messages) / (static_cast<double>(h.n_nodes) * h.levels);
      trials_body += std::to_string(h.seed) + ',' + std::to_string(h.n_nodes) + ',' +
                     std::to_string(h.delta) + ',' + std::to_string(h.levels) + ',' +
                     (h.complete ? "1" : "0") + ',' + std::to_string(h.total_messages) +
                     ',' + fmt_double(h.completion_time) + ',' + fmt_double(c_norm) + '\n';
      levels_body += hier_csv_rows(h);
    }
    summary_body = "n,delta,levels,trials,complete_rate,median_total_msgs,median_msgs_per_node_level\n";
    size_t idx = 0;
    for (int n : spec.n_list) {
      std::vector<double> totals, cnorm;
      double complete = 0.0;
      int levels = 0;
      for (int t = 0; t < spec.trials; ++t, ++idx) {
        const HierStats& h = result.hier_trials[idx];
        totals.push_back(static_cast<double>(h.total_messages));
        cnorm.push_back(static_cast<double>(h.total_messages) /
                        (static_cast<double>(h.n_nodes) * h.levels));
        if (h.complete) complete += 1.0;
        levels = h.levels;
      }
      summary_body += std::to_string(n) + ',' + std::to_string(spec.delta) + ',' +
                      std::to_string(levels) + ',' + std::to_string(spec.trials) + ',' +
                      fmt_double(complete / spec.trials) + ',' +
                      fmt_double(quantile(totals, 0.5)) + ',' +
                      fmt_double(quantile(cnorm, 0.5)) + '\n';
    }
    levels_f.stream << levels_body;
    levels_f.stream.close();
    if (!levels_f.stream) throw std::runtime_error("write failed: " + levels_f.path);
  } else {  // Gossip: analytic projection, no simulation
    trials_body = "n,delta,levels,hier_messages,gossip_projection,ratio\n";
    for (int n : spec.n_list) {
      const int64_t hier = predicted_hier_messages(n, spec.delta);
      const int levels = static_cast<int>(hier / n);
      const double gossip = gossip_projection(n, spec.gossip_exponent);
      trials_body += std::to_string(n) + ',' + std::to_string(spec.delta) + ',' +
                     std::to_string(levels) + ',' + std::to_string(hier) + ',' +
                     fmt_double(gossip) + ',' +
                     fmt_double(gossip / static_cast<double>(hier)) + '\n';
    }
    summary_body = trials_body;
  }

  trials_f.stream << trials_body;
  trials_f.stream.close();
  if (!trials_f.stream) throw std::runtime_error("write failed: " + trials_f.path);
  summary_f.stream << summary_body;
  summary_f.stream.close();
  if (!summary_f.stream) throw std::runtime_error("write failed: " + summary_f.path);

  std::string manifest;
  manifest += std::string("artifact = ") + kVersion + "\n";
  manifest += "spec_name = " + spec.name + "\n";
  manifest += "full = " + std::string(ov.full ? "1" : "0") + "\n";
  if (!dropped.empty()) {
    manifest += "dropped_n =";
    for (size_t i = 0; i < dropped.size(); ++i)
      manifest += (i ? "," : " ") + std::to_string(dropped[i]);
    manifest += " # beyond the desk-scale cap; re-run with --full\n";
  }
  manifest += "seed_rule = trial seed = seed + global trial index, expansion order "
              "protocols x n x models x speeds x trials\n";
  manifest += "files =";
  for (const std::string& f : result.files)
    manifest += " " + std::filesystem::path(f).filename().string();
  manifest += "\n--- spec ---\n";
  manifest += spec.serialize();
  manifest_f.stream << manifest;
  manifest_f.stream.close();
  if (!manifest_f.stream) throw std::runtime_error("write failed: " + manifest_f.path);

  const std::time_t now = std::time(nullptr);
  char stamp[64];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%S", std::localtime(&now));
  stamp_f.stream << stamp << "\n";
  stamp_f.stream.close();

  return result;
}

}  // namespace ezag
