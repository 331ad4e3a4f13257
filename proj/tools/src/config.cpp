#include "stablelad_cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stablelad/errors.hpp"

namespace stablelad::cli {

namespace {

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "model.drift",        "model.kappa",         "model.theta0",
      "model.sigma",        "model.sigma_value",   "model.sigma_base",
      "model.sigma_amplitude", "model.weight",     "model.weight_p",
      "model.theta_lo",     "model.theta_hi",
      "levy.alpha",         "levy.q",              "levy.nuisance",
      "levy.cp_pos",        "levy.cp_pos_rate",    "levy.cp_neg",
      "levy.cp_neg_rate",   "levy.tt_beta",        "levy.tt_beta_second",
      "levy.tt_scale",
      "design.n",           "design.h",            "design.h_rule",
      "design.horizon",     "design.T",            "design.delta",
      "design.fine_factor",
      "estimate.regressor", "estimate.rho",        "estimate.alpha_lo",
      "estimate.alpha_hi",  "estimate.window",     "estimate.scale_mode",
      "estimate.sigma_floor",
      "mc.replications",    "mc.n_grid",           "mc.h_rule",
      "mc.studentizer",     "mc.threads",
  };
  return keys;
}

std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r\n");
  const std::size_t e = s.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest_key(const std::string& key) {
  std::string best;
  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  for (const auto& k : known_keys()) {
    const std::size_t d = levenshtein(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

ConfigMap parse_stream(std::istream& in) {
  ConfigMap cfg;
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  std::map<std::string, std::string> values;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ValidationError("config line " + std::to_string(lineno) + ": malformed section");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ValidationError("config line " + std::to_string(lineno) + ": empty section name");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
    }
    const std::string dotted = section.empty() ? key : section + "." + key;
    values[dotted] = value;
  }
  ConfigMap out;
  for (auto& [k, v] : values) out.set_override(k + "=" + v);
  return out;
}

}  // namespace

ConfigMap ConfigMap::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  return parse_stream(in);
}

ConfigMap ConfigMap::from_string(const std::string& text) {
  std::istringstream in(text);
  return parse_stream(in);
}

void ConfigMap::set_override(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override must be key=value, got '" + assignment + "'");
  }
  values_[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

bool ConfigMap::has(const std::string& key) const { return values_.count(key) > 0; }

std::string ConfigMap::get_string(const std::string& key,
                                  std::optional<std::string> fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    if (fallback) return *fallback;
    throw ValidationError("missing config key `" + key + "`");
  }
  return it->second;
}

double ConfigMap::get_double(const std::string& key, std::optional<double> fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    if (fallback) return *fallback;
    throw ValidationError("missing config key `" + key + "`");
  }
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config key `" + key + "`: cannot parse number '" + it->second + "'");
  }
}

std::size_t ConfigMap::get_size(const std::string& key,
                                std::optional<std::size_t> fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    if (fallback) return *fallback;
    throw ValidationError("missing config key `" + key + "`");
  }
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw ValidationError("config key `" + key + "`: cannot parse count '" + it->second + "'");
  }
}

std::vector<std::string> ConfigMap::get_tokens(const std::string& key) const {
  std::istringstream ss(get_string(key));
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) {
    if (!tok.empty() && tok.back() == ',') tok.pop_back();
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

std::vector<double> ConfigMap::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& tok : get_tokens(key)) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ValidationError("config key `" + key + "`: cannot parse number '" + tok + "'");
    }
  }
  return out;
}

void ConfigMap::reject_unknown_keys() const {
  const auto& known = known_keys();
  for (const auto& [key, value] : values_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError("unknown config key `" + key + "` (did you mean `" +
                            nearest_key(key) + "`?)");
    }
  }
}

// ---------------------------------------------------------------------------
// Builders

namespace {

JumpDist parse_jump_dist(const ConfigMap& cfg, const std::string& key) {
  const auto tokens = cfg.get_tokens(key);
  if (tokens.empty()) throw ValidationError("config key `" + key + "`: empty jump distribution");
  JumpDist d;
  auto num = [&](std::size_t i) {
    if (i >= tokens.size()) {
      throw ValidationError("config key `" + key + "`: missing distribution parameter");
    }
    return std::stod(tokens[i]);
  };
  if (tokens[0] == "point") {
    d.kind = JumpDist::Kind::PointMass;
    d.a = num(1);
  } else if (tokens[0] == "uniform") {
    d.kind = JumpDist::Kind::Uniform;
    d.a = num(1);
    d.b = num(2);
  } else if (tokens[0] == "exponential") {
    d.kind = JumpDist::Kind::Exponential;
    d.a = num(1);
  } else {
    throw ValidationError("config key `" + key + "`: unknown jump distribution '" + tokens[0] +
                          "' (point | uniform | exponential)");
  }
  return d;
}

}  // namespace

LevyConfig build_levy(const ConfigMap& cfg) {
  LevyConfig levy;
  levy.alpha = cfg.get_double("levy.alpha");
  const std::string q = cfg.get_string("levy.q", std::string("none"));
  if (q != "none") levy.tail_index_q = cfg.get_double("levy.q");
  const std::string kind = cfg.get_string("levy.nuisance", std::string("none"));
  if (kind == "none") {
    levy.nuisance = NuisanceNone{};
  } else if (kind == "compound_poisson") {
    NuisanceCompoundPoisson cp;
    cp.positive_jumps = parse_jump_dist(cfg, "levy.cp_pos");
    cp.rate_pos = cfg.get_double("levy.cp_pos_rate", 1.0);
    cp.negative_jumps = parse_jump_dist(cfg, "levy.cp_neg");
    cp.rate_neg = cfg.get_double("levy.cp_neg_rate", 1.0);
    levy.nuisance = cp;
  } else if (kind == "tempered") {
    NuisanceTemperedTail tt;
    tt.beta = cfg.get_double("levy.tt_beta", 0.2);
    tt.beta_second = cfg.get_double("levy.tt_beta_second", 1.5);
    tt.density_scale = cfg.get_double("levy.tt_scale", 0.05);
    levy.nuisance = tt;
  } else {
    throw ValidationError("config key `levy.nuisance`: unknown variant '" + kind +
                          "' (none | compound_poisson | tempered)");
  }
  levy.validate();
  return levy;
}

namespace {

DriftFamily build_drift(const ConfigMap& cfg) {
  const std::string drift = cfg.get_string("model.drift", std::string("linear"));
  if (drift == "linear") return LinearDrift{};
  if (drift == "bernoulli") return BernoulliDrift{cfg.get_double("model.kappa", 0.5)};
  throw ValidationError("config key `model.drift`: unknown family '" + drift +
                        "' (linear | bernoulli)");
}

ScaleSpec build_sigma(const ConfigMap& cfg) {
  const std::string sigma = cfg.get_string("model.sigma", std::string("constant"));
  if (sigma == "constant") return ScaleConstant{cfg.get_double("model.sigma_value", 1.0)};
  if (sigma == "sinusoidal") {
    return ScaleSinusoidal{cfg.get_double("model.sigma_base", 1.0),
                           cfg.get_double("model.sigma_amplitude", 0.5)};
  }
  throw ValidationError("config key `model.sigma`: unknown form '" + sigma +
                        "' (constant | sinusoidal)");
}

WeightSpec build_weight(const ConfigMap& cfg) {
  if (!cfg.has("model.weight")) {
    // heavy-tailed noise under a long horizon wants a decaying weight;
    // light-tailed or fixed-horizon runs default to V = 1
    const bool ergodic = cfg.get_string("design.horizon", std::string("ergodic")) == "ergodic";
    const bool heavy = cfg.get_string("levy.q", std::string("none")) != "none";
    if (ergodic && heavy) return WeightPolyDecay{2.0};
    return WeightOne{};
  }
  const std::string weight = cfg.get_string("model.weight");
  if (weight == "one") return WeightOne{};
  if (weight == "polydecay") return WeightPolyDecay{cfg.get_double("model.weight_p", 2.0)};
  throw ValidationError("config key `model.weight`: unknown form '" + weight +
                        "' (one | polydecay)");
}

ThetaBox build_box(const ConfigMap& cfg) {
  ThetaBox box;
  box.lo = cfg.get_doubles("model.theta_lo");
  box.hi = cfg.get_doubles("model.theta_hi");
  box.validate();
  return box;
}

HorizonSpec build_horizon(const ConfigMap& cfg) {
  const std::string horizon = cfg.get_string("design.horizon", std::string("ergodic"));
  if (horizon == "ergodic") return HorizonErgodic{};
  if (horizon == "fixed") return HorizonFixedT{cfg.get_double("design.T", 1.0)};
  throw ValidationError("config key `design.horizon`: unknown mode '" + horizon +
                        "' (ergodic | fixed)");
}

double apply_h_rule(const std::string& rule_key, const ConfigMap& cfg, std::size_t n) {
  const auto tokens = cfg.get_tokens(rule_key);
  if (tokens.size() != 2) {
    throw ValidationError("config key `" + rule_key + "`: expected '<npow c> | <fixed T>'");
  }
  if (tokens[0] == "npow") {
    return std::pow(static_cast<double>(n), std::stod(tokens[1]));
  }
  if (tokens[0] == "fixed") {
    return std::stod(tokens[1]) / static_cast<double>(n);
  }
  throw ValidationError("config key `" + rule_key + "`: unknown rule '" + tokens[0] + "'");
}

}  // namespace

ModelSpec build_model(const ConfigMap& cfg) {
  ModelSpec model;
  model.drift = build_drift(cfg);
  model.theta0 = cfg.get_doubles("model.theta0");
  model.sigma = build_sigma(cfg);
  model.weight_V = build_weight(cfg);
  model.theta_domain = build_box(cfg);
  model.levy = build_levy(cfg);
  model.validate();
  return model;
}

ModelLite build_model_lite(const ConfigMap& cfg) {
  ModelLite lite;
  lite.drift = build_drift(cfg);
  lite.weight_V = build_weight(cfg);
  lite.theta_domain = build_box(cfg);
  return lite;
}

SamplingDesign build_design(const ConfigMap& cfg, std::optional<std::size_t> n_override) {
  SamplingDesign design;
  design.n = n_override ? *n_override : cfg.get_size("design.n");
  if (cfg.has("design.h") && cfg.has("design.h_rule")) {
    throw ValidationError("give either `design.h` or `design.h_rule`, not both");
  }
  if (cfg.has("design.h_rule")) {
    design.h_n = apply_h_rule("design.h_rule", cfg, design.n);
  } else {
    design.h_n = cfg.get_double("design.h");
  }
  design.horizon = build_horizon(cfg);
  design.delta = cfg.get_double("design.delta", 0.55);
  if (std::holds_alternative<HorizonFixedT>(design.horizon) && cfg.has("design.h_rule")) {
    // fixed-horizon rule: force exact T = n h
    design.h_n = std::get<HorizonFixedT>(design.horizon).T / static_cast<double>(design.n);
  }
  design.validate();
  return design;
}

PowerVariationConfig build_pv(const ConfigMap& cfg) {
  PowerVariationConfig pv;
  pv.rho = cfg.get_double("estimate.rho", 0.25);
  pv.alpha_lo = cfg.get_double("estimate.alpha_lo", 0.55);
  pv.alpha_hi = cfg.get_double("estimate.alpha_hi", 1.95);
  pv.window = cfg.get_size("estimate.window", std::size_t{0});
  if (cfg.has("estimate.sigma_floor")) pv.sigma_floor = cfg.get_double("estimate.sigma_floor");
  pv.validate();
  return pv;
}

RegressorKind build_regressor(const ConfigMap& cfg) {
  const std::string name = cfg.get_string("estimate.regressor", std::string("euler"));
  if (name == "euler") return RegressorKind::Euler;
  if (name == "improved_euler") return RegressorKind::ImprovedEuler;
  if (name == "exact_linear") return RegressorKind::ExactLinear;
  if (name == "exact_bernoulli") return RegressorKind::ExactBernoulli;
  throw ValidationError("config key `estimate.regressor`: unknown kind '" + name +
                        "' (euler | improved_euler | exact_linear | exact_bernoulli)");
}

int config_fine_factor(const ConfigMap& cfg) {
  const std::size_t ff = cfg.get_size("design.fine_factor", std::size_t{32});
  if (ff < 1 || ff > 4096) throw ValidationError("design.fine_factor must be in [1, 4096]");
  return static_cast<int>(ff);
}

CampaignConfig build_campaign(const ConfigMap& cfg, const std::string& out_dir,
                              std::uint64_t base_seed) {
  CampaignConfig campaign;
  campaign.model = build_model(cfg);
  campaign.regressor = build_regressor(cfg);
  campaign.pv = build_pv(cfg);
  campaign.replications = cfg.get_size("mc.replications", std::size_t{100});
  campaign.base_seed = base_seed;
  campaign.out_dir = out_dir;
  campaign.threads = static_cast<int>(cfg.get_size("mc.threads", std::size_t{0}));

  const std::string stud = cfg.get_string("mc.studentizer", std::string("data"));
  if (stud == "data") {
    campaign.studentizer = StudentizerMode::DataDriven;
  } else if (stud == "oracle") {
    campaign.studentizer = StudentizerMode::Oracle;
  } else if (stud == "identity") {
    campaign.studentizer = StudentizerMode::Identity;
  } else {
    throw ValidationError("config key `mc.studentizer`: unknown mode '" + stud +
                          "' (data | oracle | identity)");
  }

  std::vector<std::size_t> n_grid;
  if (cfg.has("mc.n_grid")) {
    for (double v : cfg.get_doubles("mc.n_grid")) n_grid.push_back(static_cast<std::size_t>(v));
  } else {
    n_grid.push_back(cfg.get_size("design.n"));
  }
  const int ff = config_fine_factor(cfg);
  for (std::size_t n : n_grid) {
    DesignCell cell;
    cell.design.n = n;
    if (cfg.has("mc.h_rule")) {
      cell.design.h_n = apply_h_rule("mc.h_rule", cfg, n);
    } else if (cfg.has("design.h_rule")) {
      cell.design.h_n = apply_h_rule("design.h_rule", cfg, n);
    } else {
      cell.design.h_n = cfg.get_double("design.h");
    }
    cell.design.horizon = build_horizon(cfg);
    cell.design.delta = cfg.get_double("design.delta", 0.55);
    if (std::holds_alternative<HorizonFixedT>(cell.design.horizon)) {
      cell.design.h_n =
          std::get<HorizonFixedT>(cell.design.horizon).T / static_cast<double>(n);
    }
    cell.fine_factor = ff;
    cell.id = "n" + std::to_string(n);
    campaign.designs.push_back(std::move(cell));
  }
  campaign.validate();
  return campaign;
}

}  // namespace stablelad::cli
