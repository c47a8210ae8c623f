#include "gde/io/results.hpp"

#include <string>

#include "gde/errors.hpp"
#include "text.hpp"

namespace gde::io {

using detail::format_double;
using detail::where;

nlohmann::json sim_config_to_json(const particles::SimConfig& cfg) {
  return {{"n", cfg.n},         {"alpha", cfg.alpha},     {"beta", cfg.beta}, {"r", cfg.r},
          {"dt", cfg.dt},       {"horizon", cfg.horizon}, {"seed", cfg.seed}};
}

particles::SimConfig sim_config_from_json(const nlohmann::json& j) {
  particles::SimConfig c;
  try {
    c.n = j.at("n").get<std::size_t>();
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
    c.r = j.at("r").get<double>();
    c.dt = j.at("dt").get<double>();
    c.horizon = j.at("horizon").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("simulation parameters: ") + e.what());
  }
  return c;
}

void write_rollout(const particles::Rollout& rollout, const particles::SimConfig& cfg,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = detail::open_out(dir / "rollout.csv");
    out << "step,t,particle,x1,x2,v1,v2\n";
    for (std::size_t k = 0; k < rollout.size(); ++k) {
      const auto& s = rollout.states[k];
      const std::string t = format_double(static_cast<double>(k) * rollout.dt);
      for (std::size_t i = 0; i < s.size(); ++i) {
        const auto r = static_cast<ad::Index>(i);
        out << k << ',' << t << ',' << i << ',' << format_double(s.positions(r, 0)) << ','
            << format_double(s.positions(r, 1)) << ',' << format_double(s.velocities(r, 0)) << ','
            << format_double(s.velocities(r, 1)) << '\n';
      }
    }
    if (!out) throw IoError("failed writing rollout.csv");
  }
  {
    auto out = detail::open_out(dir / "rollout_edges.txt");
    out << "# step i j\n";
    for (std::size_t k = 0; k < rollout.adjacencies.size(); ++k)
      for (const auto& [i, j] : rollout.adjacencies[k].edges())
        if (i <= j) out << k << ' ' << i << ' ' << j << '\n';
    if (!out) throw IoError("failed writing rollout_edges.txt");
  }
  auto meta = sim_config_to_json(cfg);
  meta["steps"] = rollout.size();
  write_json(dir / "rollout.json", meta);
}

LoadedRollout read_rollout(const std::filesystem::path& dir) {
  LoadedRollout lr;
  const nlohmann::json meta = read_json(dir / "rollout.json");
  lr.config = sim_config_from_json(meta);
  std::size_t steps = 0;
  try {
    steps = meta.at("steps").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError((dir / "rollout.json").string() + ": " + e.what());
  }
  const std::size_t n = lr.config.n;
  auto& r = lr.rollout;
  r.dt = lr.config.dt;
  r.horizon = lr.config.horizon;
  r.states.assign(steps, particles::ParticleState{Matrix::Zero(static_cast<ad::Index>(n), 2),
                                                  Matrix::Zero(static_cast<ad::Index>(n), 2)});
  std::vector<std::vector<char>> seen(steps, std::vector<char>(n, 0));

  const auto csv = dir / "rollout.csv";
  auto in = detail::open_in(csv);
  std::string line;
  std::size_t lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    if (header) {
      header = false;
      if (detail::trim(line) != "step,t,particle,x1,x2,v1,v2") throw IoError(where(csv, lineno) + ": unexpected header");
      continue;
    }
    const auto f = detail::split(line, ',');
    if (f.size() != 7) throw IoError(where(csv, lineno) + ": expected 7 columns, got " + std::to_string(f.size()));
    const auto k = detail::parse_int<std::size_t>(f[0], where(csv, lineno));
    const auto i = detail::parse_int<std::size_t>(f[2], where(csv, lineno));
    detail::parse_double(f[1], where(csv, lineno));
    if (k >= steps || i >= n)
      throw IoError(where(csv, lineno) + ": step " + std::to_string(k) + " particle " + std::to_string(i) +
                    " outside the declared " + std::to_string(steps) + " x " + std::to_string(n));
    if (seen[k][i]) throw IoError(where(csv, lineno) + ": duplicate row");
    seen[k][i] = 1;
    const auto row = static_cast<ad::Index>(i);
    r.states[k].positions(row, 0) = detail::parse_double(f[3], where(csv, lineno));
    r.states[k].positions(row, 1) = detail::parse_double(f[4], where(csv, lineno));
    r.states[k].velocities(row, 0) = detail::parse_double(f[5], where(csv, lineno));
    r.states[k].velocities(row, 1) = detail::parse_double(f[6], where(csv, lineno));
  }
  for (std::size_t k = 0; k < steps; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (!seen[k][i])
        throw IoError(csv.string() + ": missing step " + std::to_string(k) + " particle " + std::to_string(i));

  const auto epath = dir / "rollout_edges.txt";
  auto ein = detail::open_in(epath);
  std::vector<std::vector<graph::Edge>> edges(steps);
  lineno = 0;
  while (std::getline(ein, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    const auto f = detail::split(detail::trim(line), ' ');
    std::vector<std::string_view> parts;
    for (auto p : f)
      if (!p.empty()) parts.push_back(p);
    if (parts.size() != 3) throw IoError(where(epath, lineno) + ": expected 'step i j'");
    const auto k = detail::parse_int<std::size_t>(parts[0], where(epath, lineno));
    const auto i = detail::parse_int<std::size_t>(parts[1], where(epath, lineno));
    const auto j = detail::parse_int<std::size_t>(parts[2], where(epath, lineno));
    if (k >= steps || i >= n || j >= n) throw IoError(where(epath, lineno) + ": index out of range");
    edges[k].emplace_back(i, j);
  }
  for (std::size_t k = 0; k < steps; ++k) r.adjacencies.push_back(graph::Graph::undirected(n, edges[k]));
  return lr;
}

void write_predictions(const std::filesystem::path& path, const std::vector<PredictionRow>& rows) {
  auto out = detail::open_out(path);
  out << "k,t_k,node,target,prediction\n";
  for (const auto& r : rows)
    out << r.k << ',' << format_double(r.t) << ',' << r.node << ',' << format_double(r.target) << ','
        << format_double(r.prediction) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<PredictionRow> read_predictions(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::vector<PredictionRow> rows;
  std::string line;
  std::size_t lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = detail::split(line, ',');
    if (f.size() != 5) throw IoError(where(path, lineno) + ": expected 5 columns");
    rows.push_back({detail::parse_int<std::size_t>(f[0], where(path, lineno)),
                    detail::parse_double(f[1], where(path, lineno)),
                    detail::parse_int<std::size_t>(f[2], where(path, lineno)),
                    detail::parse_double(f[3], where(path, lineno)),
                    detail::parse_double(f[4], where(path, lineno))});
  }
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = detail::open_out(path);
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace gde::io
