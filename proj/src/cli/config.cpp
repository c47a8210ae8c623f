#include "gde/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gde/errors.hpp"

namespace gde::cli {

namespace pt = boost::property_tree;

Task parse_task(std::string_view name) {
  if (name == "node-class") return Task::node_class;
  if (name == "particles") return Task::particles;
  if (name == "forecast") return Task::forecast;
  throw ConfigError("unknown task '" + std::string(name) + "' (node-class, particles, forecast)");
}

std::string_view to_string(Task t) {
  switch (t) {
    case Task::node_class: return "node-class";
    case Task::particles: return "particles";
    case Task::forecast: return "forecast";
  }
  return "particles";
}

const std::vector<std::string>& models_for(Task t) {
  static const std::vector<std::string> node{"gcn", "gcde-rk2", "gcde-rk4", "gcde-dpr5"};
  static const std::vector<std::string> part{"static-baseline", "node-baseline", "gcde", "gcde2"};
  static const std::vector<std::string> fore{"gru", "gcgru", "gcde-gru"};
  switch (t) {
    case Task::node_class: return node;
    case Task::particles: return part;
    case Task::forecast: return fore;
  }
  return part;
}

namespace {

std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T number(std::string_view text, const std::string& key) {
  text = strip(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("config key '" + key + "': cannot parse '" + std::string(text) + "'");
  return v;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    auto num = [](auto member) {
      return [member](RunConfig& c, const std::string& v, const std::string& k) {
        using T = std::remove_reference_t<decltype(c.*member)>;
        c.*member = number<T>(v, k);
      };
    };
    m["run.task"] = [](RunConfig& c, const std::string& v, const std::string&) { c.task = parse_task(strip(v)); };
    m["run.model"] = [](RunConfig& c, const std::string& v, const std::string&) { c.model = std::string(strip(v)); };
    m["run.seeds"] = [](RunConfig& c, const std::string& v, const std::string&) { c.seeds = parse_seed_list(v); };
    m["run.out"] = [](RunConfig& c, const std::string& v, const std::string&) { c.out = std::string(strip(v)); };
    m["run.horizons"] = [](RunConfig& c, const std::string& v, const std::string&) { c.horizons = parse_int_list(v); };

    m["sim.n"] = [](RunConfig& c, const std::string& v, const std::string& k) { c.sim.n = number<std::size_t>(v, k); };
    m["sim.alpha"] = [](RunConfig& c, const std::string& v, const std::string& k) { c.sim.alpha = number<double>(v, k); };
    m["sim.beta"] = [](RunConfig& c, const std::string& v, const std::string& k) { c.sim.beta = number<double>(v, k); };
    m["sim.r"] = [](RunConfig& c, const std::string& v, const std::string& k) { c.sim.r = number<double>(v, k); };
    m["sim.dt"] = [](RunConfig& c, const std::string& v, const std::string& k) { c.sim.dt = number<double>(v, k); };
    m["sim.horizon"] = [](RunConfig& c, const std::string& v, const std::string& k) {
      c.sim.horizon = number<double>(v, k);
    };
    m["sim.seed"] = [](RunConfig& c, const std::string& v, const std::string& k) {
      c.sim.seed = number<std::uint64_t>(v, k);
    };
    m["sim.rollout"] = [](RunConfig& c, const std::string& v, const std::string&) { c.rollout = std::string(strip(v)); };

    m["solver.scheme"] = [](RunConfig& c, const std::string& v, const std::string&) {
      c.solver.scheme = odeint::parse_scheme(strip(v));
    };
    m["solver.steps"] = [](RunConfig& c, const std::string& v, const std::string& k) {
      c.solver.fixed_steps = number<int>(v, k);
    };
    m["solver.rtol"] = [](RunConfig& c, const std::string& v, const std::string& k) { c.solver.rtol = number<double>(v, k); };
    m["solver.atol"] = [](RunConfig& c, const std::string& v, const std::string& k) { c.solver.atol = number<double>(v, k); };
    m["solver.max_steps"] = [](RunConfig& c, const std::string& v, const std::string& k) {
      c.solver.max_steps = number<int>(v, k);
    };
    m["solver.dt_min"] = [](RunConfig& c, const std::string& v, const std::string& k) {
      c.solver.dt_min = number<double>(v, k);
    };

    m["optim.epochs"] = num(&RunConfig::epochs);
    m["optim.lr"] = num(&RunConfig::lr);
    m["optim.weight_decay"] = num(&RunConfig::weight_decay);
    m["optim.batch_size"] = num(&RunConfig::batch_size);
    m["optim.schedule"] = [](RunConfig& c, const std::string& v, const std::string&) {
      c.schedule = train::parse_schedule(strip(v));
    };
    m["optim.t0"] = num(&RunConfig::t0);

    m["model.hidden"] = num(&RunConfig::hidden);
    m["model.field"] = [](RunConfig& c, const std::string& v, const std::string&) {
      c.field = fields::parse_layer_specs(strip(v));
    };
    m["model.input_dropout"] = num(&RunConfig::input_dropout);
    m["model.field_dropout"] = num(&RunConfig::field_dropout);
    m["model.gru_hidden"] = num(&RunConfig::gru_hidden);
    m["model.gcgru_hidden"] = num(&RunConfig::gcgru_hidden);
    m["model.head_hidden"] = num(&RunConfig::head_hidden);
    m["model.time_scale"] = num(&RunConfig::time_scale);

    m["data.dir"] = [](RunConfig& c, const std::string& v, const std::string&) { c.data_dir = std::string(strip(v)); };
    m["data.sbm_nodes"] = [](RunConfig& c, const std::string& v, const std::string& k) {
      c.sbm.nodes = number<std::size_t>(v, k);
    };
    m["data.sbm_p_in"] = [](RunConfig& c, const std::string& v, const std::string& k) {
      c.sbm.p_in = number<double>(v, k);
    };
    m["data.sbm_p_out"] = [](RunConfig& c, const std::string& v, const std::string& k) {
      c.sbm.p_out = number<double>(v, k);
    };
    m["data.sbm_noise"] = [](RunConfig& c, const std::string& v, const std::string& k) {
      c.sbm.noise = number<double>(v, k);
    };
    m["data.sbm_seed"] = [](RunConfig& c, const std::string& v, const std::string& k) {
      c.sbm.seed = number<std::uint64_t>(v, k);
    };
    m["data.stream_nodes"] = [](RunConfig& c, const std::string& v, const std::string& k) {
      c.stream.nodes = number<std::size_t>(v, k);
    };
    m["data.stream_steps"] = [](RunConfig& c, const std::string& v, const std::string& k) {
      c.stream.steps = number<std::size_t>(v, k);
    };
    m["data.stream_noise"] = [](RunConfig& c, const std::string& v, const std::string& k) {
      c.stream.noise = number<double>(v, k);
    };
    m["data.stream_seed"] = [](RunConfig& c, const std::string& v, const std::string& k) {
      c.stream.seed = number<std::uint64_t>(v, k);
    };
    m["data.keep_prob"] = num(&RunConfig::keep_prob);
    m["data.period"] = num(&RunConfig::period);
    m["data.window"] = num(&RunConfig::window);
    m["data.train_fraction"] = num(&RunConfig::train_fraction);
    return m;
  }();
  return table;
}

RunConfig from_tree(const pt::ptree& tree) {
  RunConfig c;
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config key '" + section + "' must live inside a [section]");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = table.find(full);
      if (it == table.end()) throw ConfigError("unknown config key '" + full + "'");
      it->second(c, value.data(), full);
    }
  }
  c.stream.period = c.period;
  if (c.horizons.empty() && c.task == Task::particles) c.horizons = train::kDefaultHorizons;
  if (c.horizons.empty()) c.horizons = {1};
  c.validate();
  return c;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  text = strip(text);
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  if (dots != std::string_view::npos) {
    const auto lo = number<std::uint64_t>(text.substr(0, dots), "seeds");
    const auto hi = number<std::uint64_t>(text.substr(dots + 2), "seeds");
    if (hi < lo) throw ConfigError("seed range '" + std::string(text) + "' is empty");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const auto comma = text.find(',', begin);
    seeds.push_back(number<std::uint64_t>(text.substr(begin, comma - begin), "seeds"));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return seeds;
}

std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  for (auto s : parse_seed_list(text)) out.push_back(static_cast<int>(s));
  return out;
}

void RunConfig::validate() const {
  const auto& allowed = models_for(task);
  if (std::find(allowed.begin(), allowed.end(), model) == allowed.end()) {
    std::string list;
    for (const auto& m : allowed) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("model '" + model + "' is not valid for task " + std::string(to_string(task)) + " (" + list +
                      ")");
  }
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (epochs < -1) throw ConfigError("optim.epochs must be non-negative");
  if (!(lr >= 0.0)) throw ConfigError("optim.lr must be non-negative");
  if (t0 < 1) throw ConfigError("optim.t0 must be positive");
  for (int h : horizons)
    if (h < 1) throw ConfigError("horizons must be positive");
  if (!std::is_sorted(horizons.begin(), horizons.end())) throw ConfigError("horizons must be sorted ascending");
  if (hidden < 1 || gru_hidden < 1 || gcgru_hidden < 1 || head_hidden < 1)
    throw ConfigError("hidden widths must be positive");
  if (input_dropout < 0.0 || input_dropout >= 1.0 || field_dropout < 0.0 || field_dropout >= 1.0)
    throw ConfigError("dropout rates must lie in [0, 1)");
  if (!(time_scale > 0.0)) throw ConfigError("model.time_scale must be positive");
  if (!(keep_prob > 0.0) || keep_prob > 1.0) throw ConfigError("data.keep_prob must lie in (0, 1]");
  if (!(period > 0.0)) throw ConfigError("data.period must be positive");
  if (window < 1) throw ConfigError("data.window must be at least 1");
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) throw ConfigError("data.train_fraction must lie in (0, 1)");
  sim.validate();
  odeint::SolverConfig probe = solver;
  probe.s0 = 0.0;
  probe.s1 = 1.0;
  probe.validate();
}

nlohmann::json RunConfig::to_json() const {
  return {
      {"run",
       {{"task", to_string(task)}, {"model", model}, {"seeds", seeds}, {"out", out.string()}, {"horizons", horizons}}},
      {"sim",
       {{"n", sim.n},
        {"alpha", sim.alpha},
        {"beta", sim.beta},
        {"r", sim.r},
        {"dt", sim.dt},
        {"horizon", sim.horizon},
        {"seed", sim.seed},
        {"rollout", rollout.string()}}},
      {"solver",
       {{"scheme", odeint::to_string(solver.scheme)},
        {"steps", solver.fixed_steps},
        {"rtol", solver.rtol},
        {"atol", solver.atol},
        {"max_steps", solver.max_steps},
        {"dt_min", solver.dt_min}}},
      {"optim",
       {{"epochs", epochs},
        {"lr", lr},
        {"weight_decay", weight_decay},
        {"batch_size", batch_size},
        {"schedule", !schedule ? "default" : *schedule == train::ScheduleKind::constant ? "constant" : "cosine-annealing"},
        {"t0", t0}}},
      {"model",
       {{"hidden", hidden},
        {"field", fields::format_layer_specs(field)},
        {"input_dropout", input_dropout},
        {"field_dropout", field_dropout},
        {"gru_hidden", gru_hidden},
        {"gcgru_hidden", gcgru_hidden},
        {"head_hidden", head_hidden},
        {"time_scale", time_scale}}},
      {"data",
       {{"dir", data_dir.string()},
        {"sbm_nodes", sbm.nodes},
        {"sbm_p_in", sbm.p_in},
        {"sbm_p_out", sbm.p_out},
        {"sbm_noise", sbm.noise},
        {"sbm_seed", sbm.seed},
        {"stream_nodes", stream.nodes},
        {"stream_steps", stream.steps},
        {"stream_noise", stream.noise},
        {"stream_seed", stream.seed},
        {"keep_prob", keep_prob},
        {"period", period},
        {"window", window},
        {"train_fraction", train_fraction}}},
  };
}

RunConfig parse_config_string(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return from_tree(tree);
}

RunConfig parse_config(const std::filesystem::path& path) {
  pt::ptree tree;
  if (!std::filesystem::exists(path)) throw IoError("config file " + path.string() + " does not exist");
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  return from_tree(tree);
}

}  // namespace gde::cli
