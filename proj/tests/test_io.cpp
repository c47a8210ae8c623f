#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "gde/errors.hpp"
#include "gde/io/results.hpp"
#include "gde/io/sequence.hpp"
#include "gde/io/static_data.hpp"
#include "support/criteria.hpp"
#include "support/helpers.hpp"

using namespace gde;
using gde::testing::mat;
using gde::testing::TempDir;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream s(text);
  for (std::string line; std::getline(s, line);) out.push_back(line);
  return out;
}

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

void toy_fixture(const fs::path& dir) {
  write_file(dir / "features.csv", "1,0\n0,1\n0.5,0.5\n");
  write_file(dir / "edges.txt", "0 1\n1 2\n");
  write_file(dir / "labels.csv", "0\n1\n1\n");
  write_file(dir / "masks.csv", "1,0,0\n0,1,0\n0,0,1\n");
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const IoError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(LoadStatic, ToyFixture) {
  TempDir dir("io_toy");
  toy_fixture(dir.path());
  const auto d = io::load_static(io::StaticFiles::in(dir.path()));
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.features.cols(), 2);
  EXPECT_EQ(d.features, mat({{1, 0}, {0, 1}, {0.5, 0.5}}));
  EXPECT_EQ(d.num_classes(), 2);
  EXPECT_TRUE(d.graph.has_edge(2, 1));
  EXPECT_EQ(d.train_mask, (std::vector<char>{1, 0, 0}));
  EXPECT_EQ(d.test_mask, (std::vector<char>{0, 0, 1}));
}

TEST(LoadStatic, RowMismatchNamesBothCounts) {
  TempDir dir("io_rows");
  toy_fixture(dir.path());
  write_file(dir / "labels.csv", "0\n1\n");
  const auto msg = error_of([&] { io::load_static(io::StaticFiles::in(dir.path())); });
  EXPECT_NE(msg.find("3 rows"), std::string::npos) << msg;
  EXPECT_NE(msg.find("has 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("labels.csv"), std::string::npos) << msg;
}

TEST(LoadStatic, MalformedLineCarriesFileAndLine) {
  TempDir dir("io_malformed");
  toy_fixture(dir.path());
  write_file(dir / "features.csv", "1,0\n0,x\n0.5,0.5\n");
  auto msg = error_of([&] { io::load_static(io::StaticFiles::in(dir.path())); });
  EXPECT_NE(msg.find("features.csv:2"), std::string::npos) << msg;

  toy_fixture(dir.path());
  write_file(dir / "labels.csv", "0\n1\n-1\n");
  msg = error_of([&] { io::load_static(io::StaticFiles::in(dir.path())); });
  EXPECT_NE(msg.find("labels.csv:3"), std::string::npos) << msg;

  toy_fixture(dir.path());
  write_file(dir / "masks.csv", "1,0,0\n1,1,0\n0,0,1\n");
  msg = error_of([&] { io::load_static(io::StaticFiles::in(dir.path())); });
  EXPECT_NE(msg.find("masks.csv:2"), std::string::npos) << msg;
}

TEST(LoadStatic, MissingFileIsIoError) {
  TempDir dir("io_missing");
  toy_fixture(dir.path());
  fs::remove(dir / "masks.csv");
  EXPECT_THROW(io::load_static(io::StaticFiles::in(dir.path())), IoError);
}

TEST(LoadStatic, RoundTripIsBitExact) {
  io::SbmConfig cfg;
  cfg.nodes = 60;
  cfg.val = 10;
  cfg.test = 10;
  cfg.train_per_class = 5;
  const auto d = io::make_sbm(cfg);
  TempDir dir("io_static_rt");
  io::save_static(d, io::StaticFiles::in(dir.path()));
  const auto back = io::load_static(io::StaticFiles::in(dir.path()));
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.graph, d.graph);
  EXPECT_EQ(back.train_mask, d.train_mask);
  EXPECT_EQ(back.val_mask, d.val_mask);
  EXPECT_EQ(back.test_mask, d.test_mask);
}

TEST(Sbm, SplitsDisjointAndSized) {
  const auto d = io::make_sbm({});
  d.validate();
  std::size_t train = 0, val = 0, test = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    train += d.train_mask[i];
    val += d.val_mask[i];
    test += d.test_mask[i];
  }
  EXPECT_EQ(train, 40u);
  EXPECT_EQ(val, 60u);
  EXPECT_EQ(test, 100u);
  io::SbmConfig bad;
  bad.blocks = 1;
  EXPECT_THROW(io::make_sbm(bad), ConfigError);
}

namespace {

io::TemporalDataset small_stream(std::size_t steps = 6) {
  io::SyntheticStreamConfig cfg;
  cfg.nodes = 4;
  cfg.steps = steps;
  cfg.seed = 3;
  return io::with_time_features(io::make_synthetic_stream(cfg), 24.0);
}

}  // namespace

TEST(Sequence, RoundTripIsBitExact) {
  auto d = small_stream();
  d.sequence.timestamps = {0.0, 0.1, 0.3, 1.0 / 3.0, 2.5, 7.25};
  d.sequence.graphs[2] = graph::Graph::undirected(4, {{0, 2}});
  TempDir dir("io_seq_rt");
  io::save_sequence(d, dir.path());
  EXPECT_TRUE(io::load_sequence(dir.path()) == d);
}

TEST(Sequence, MetaNodesZeroRejected) {
  auto d = small_stream();
  TempDir dir("io_seq_zero");
  io::save_sequence(d, dir.path());
  auto meta = io::read_json(dir / "meta.json");
  meta["nodes"] = 0;
  io::write_json(dir / "meta.json", meta);
  EXPECT_THROW(io::load_sequence(dir.path()), IoError);
}

TEST(Sequence, TargetChannelOutOfRange) {
  auto d = small_stream();
  TempDir dir("io_seq_target");
  io::save_sequence(d, dir.path());
  auto meta = io::read_json(dir / "meta.json");
  meta["target_channels"] = {7};
  io::write_json(dir / "meta.json", meta);
  EXPECT_THROW(io::load_sequence(dir.path()), IoError);
}

TEST(Rollout, RoundTripIsBitExact) {
  particles::SimConfig cfg;
  cfg.n = 5;
  cfg.horizon = 1.0;
  const auto roll = particles::simulate(cfg);
  TempDir dir("io_roll_rt");
  io::write_rollout(roll, cfg, dir.path());
  const auto back = io::read_rollout(dir.path());
  ASSERT_EQ(back.rollout.size(), roll.size());
  for (std::size_t k = 0; k < roll.size(); ++k) {
    ASSERT_EQ(back.rollout.states[k], roll.states[k]) << k;
    ASSERT_EQ(back.rollout.adjacencies[k], roll.adjacencies[k]) << k;
  }
  EXPECT_EQ(back.config.n, cfg.n);
  EXPECT_EQ(back.config.dt, cfg.dt);
  EXPECT_EQ(back.config.seed, cfg.seed);
}

TEST(Predictions, RoundTripIsBitExact) {
  std::vector<io::PredictionRow> rows{{0, 0.0, 0, 1.0 / 3.0, 0.1}, {1, 2.5, 3, -1e-300, 6.02e23}};
  TempDir dir("io_pred_rt");
  io::write_predictions(dir / "p.csv", rows);
  const auto back = io::read_predictions(dir / "p.csv");
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    EXPECT_EQ(back[r].k, rows[r].k);
    EXPECT_EQ(back[r].t, rows[r].t);
    EXPECT_EQ(back[r].node, rows[r].node);
    EXPECT_EQ(back[r].target, rows[r].target);
    EXPECT_EQ(back[r].prediction, rows[r].prediction);
  }
  write_file(dir / "bad.csv", "k,t_k,node,target,prediction\n0,0,0,1.2.3,1\n");
  EXPECT_THROW(io::read_predictions(dir / "bad.csv"), IoError);
}

// Fuzzed structural corruptions: each one must surface as an error, never a
// silently different dataset.
namespace {

enum class Corruption { DropLine, BadNumber, DuplicateLine };

std::string corrupt(const std::string& text, Corruption kind, std::mt19937_64& rng, bool has_header) {
  auto lines = lines_of(text);
  const std::size_t first = has_header ? 1 : 0;
  std::uniform_int_distribution<std::size_t> pick(first, lines.size() - 1);
  const std::size_t at = pick(rng);
  switch (kind) {
    case Corruption::DropLine:
      lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(at));
      break;
    case Corruption::DuplicateLine:
      lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(at), lines[at]);
      break;
    case Corruption::BadNumber: {
      auto& l = lines[at];
      const auto comma = l.find(',');
      l = "1.2.3" + (comma == std::string::npos ? std::string() : l.substr(comma));
      break;
    }
  }
  return join(lines);
}

template <class Load>
void expect_rejected(const fs::path& file, const std::string& original, Corruption kind, bool has_header,
                     std::mt19937_64& rng, Load load) {
  write_file(file, corrupt(original, kind, rng, has_header));
  bool rejected = false;
  try {
    load();
  } catch (const IoError&) {
    rejected = true;
  } catch (const ContractError&) {
    rejected = true;
  }
  write_file(file, original);
  EXPECT_TRUE(rejected) << file << " corruption " << static_cast<int>(kind);
}

}  // namespace

TEST(Fuzz, StaticCorruptionsNeverLoadSilently) {
  std::mt19937_64 rng(11);
  io::SbmConfig cfg;
  cfg.nodes = 30;
  cfg.val = 5;
  cfg.test = 5;
  cfg.train_per_class = 3;
  TempDir dir("io_fuzz_static");
  const auto files = io::StaticFiles::in(dir.path());
  io::save_static(io::make_sbm(cfg), files);
  const auto load = [&] { io::load_static(files); };
  for (int trial = 0; trial < 20; ++trial) {
    for (const auto& f : {files.features, files.labels, files.masks}) {
      const auto original = read_file(f);
      expect_rejected(f, original, Corruption::DropLine, false, rng, load);
      expect_rejected(f, original, Corruption::BadNumber, false, rng, load);
      expect_rejected(f, original, Corruption::DuplicateLine, false, rng, load);
    }
  }
  const auto edges = read_file(files.edges);
  write_file(files.edges, edges + "0 30\n");
  EXPECT_THROW(load(), IoError);
  write_file(files.edges, edges + "0\n");
  EXPECT_THROW(load(), IoError);
  write_file(files.edges, edges);
  write_file(files.masks, "1,1,0\n" + read_file(files.masks).substr(6));
  EXPECT_THROW(load(), IoError);
}

TEST(Fuzz, SequenceCorruptionsNeverLoadSilently) {
  std::mt19937_64 rng(12);
  TempDir dir("io_fuzz_seq");
  io::save_sequence(small_stream(), dir.path());
  const auto load = [&] { io::load_sequence(dir.path()); };
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = dir / ("t_" + std::to_string(trial % 6) + ".csv");
    const auto original = read_file(f);
    expect_rejected(f, original, Corruption::DropLine, false, rng, load);
    expect_rejected(f, original, Corruption::BadNumber, false, rng, load);
    expect_rejected(f, original, Corruption::DuplicateLine, false, rng, load);
  }
  const auto meta = read_file(dir / "meta.json");
  write_file(dir / "meta.json", meta.substr(0, meta.size() / 2));
  EXPECT_THROW(load(), IoError);
  write_file(dir / "meta.json", "{\"timestamps\": [0, 1], \"nodes\": 4}");
  EXPECT_THROW(load(), IoError);
  write_file(dir / "meta.json", meta);
  fs::remove(dir / "edges_3.txt");
  EXPECT_THROW(load(), IoError);
}

TEST(Fuzz, RolloutCorruptionsNeverLoadSilently) {
  std::mt19937_64 rng(13);
  particles::SimConfig cfg;
  cfg.n = 4;
  cfg.horizon = 0.5;
  TempDir dir("io_fuzz_roll");
  io::write_rollout(particles::simulate(cfg), cfg, dir.path());
  const auto load = [&] { io::read_rollout(dir.path()); };
  const auto csv = dir / "rollout.csv";
  const auto original = read_file(csv);
  for (int trial = 0; trial < 20; ++trial) {
    expect_rejected(csv, original, Corruption::DropLine, true, rng, load);
    expect_rejected(csv, original, Corruption::DuplicateLine, true, rng, load);
  }
  // A bad number in every column position.
  auto lines = lines_of(original);
  for (std::size_t col = 0; col < 7; ++col) {
    std::string row = lines[5];
    std::vector<std::string> parts;
    std::stringstream s(row);
    for (std::string p; std::getline(s, p, ',');) parts.push_back(p);
    parts[col] = "1.2.3";
    std::string bad;
    for (std::size_t c = 0; c < parts.size(); ++c) bad += (c ? "," : "") + parts[c];
    auto copy = lines;
    copy[5] = bad;
    write_file(csv, join(copy));
    EXPECT_THROW(load(), IoError) << "column " << col;
  }
  write_file(csv, original);
  const auto edges = read_file(dir / "rollout_edges.txt");
  write_file(dir / "rollout_edges.txt", edges + "0 0 9\n");
  EXPECT_THROW(load(), IoError);
  write_file(dir / "rollout_edges.txt", edges);
  write_file(dir / "rollout.json", "{\"dt\": ");
  EXPECT_THROW(load(), IoError);
}

TEST(Undersample, KeepAllIsIdentity) {
  const auto d = small_stream(50);
  EXPECT_TRUE(io::undersample(d, 1.0, 9) == d);
}

TEST(Undersample, SurvivorFractionWithinThreeSigma) {
  const std::size_t n = 20000;
  const double p = 0.3;
  const auto kept = io::undersample_indices(n, p, 5);
  // First arrival is always kept; the rest are Bernoulli(p).
  const double survivors = static_cast<double>(kept.size() - 1);
  const double mean = p * (n - 1);
  const double sigma = std::sqrt((n - 1) * p * (1 - p));
  EXPECT_LT(std::abs(survivors - mean), 3 * sigma);
  EXPECT_EQ(kept.front(), 0u);
}

TEST(Undersample, GapsAreGeometric) {
  const double p = 0.3;
  const auto kept = io::undersample_indices(50000, p, 6);
  std::vector<std::size_t> gaps;
  for (std::size_t i = 1; i < kept.size(); ++i) gaps.push_back(kept[i] - kept[i - 1]);
  double mean = 0.0;
  for (auto g : gaps) mean += static_cast<double>(g);
  mean /= static_cast<double>(gaps.size());
  EXPECT_NEAR(mean, 1.0 / p, 0.05);
  int dof = 0;
  const double chi2 = checks::geometric_chi_square(gaps, p, dof);
  EXPECT_GT(dof, 3);
  // 0.999 quantile of chi-square with up to 30 dof is below 60.
  EXPECT_LT(chi2, 60.0);
}

TEST(Undersample, ReproducibleUnderSeed) {
  const auto d = small_stream(200);
  EXPECT_TRUE(io::undersample(d, 0.4, 17) == io::undersample(d, 0.4, 17));
  EXPECT_NE(io::undersample_indices(200, 0.4, 17), io::undersample_indices(200, 0.4, 18));
  const auto sub = io::undersample(d, 0.4, 17);
  for (std::size_t k = 1; k < sub.size(); ++k) EXPECT_LT(sub.sequence.timestamps[k - 1], sub.sequence.timestamps[k]);
}

TEST(Undersample, BadProbabilityIsConfigError) {
  EXPECT_THROW(io::undersample_indices(10, 0.0, 1), ConfigError);
  EXPECT_THROW(io::undersample_indices(10, 1.5, 1), ConfigError);
  EXPECT_THROW(io::undersample_indices(10, std::nan(""), 1), ConfigError);
}

TEST(TimeFeatures, Examples) {
  const auto f = io::sine_time_features({0.0, 6.0}, 24.0);
  EXPECT_EQ(f(0, 0), 0.0);
  EXPECT_EQ(f(0, 1), 1.0);
  EXPECT_NEAR(f(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(f(1, 1), 0.0, 1e-15);
  EXPECT_THROW(io::sine_time_features({0.0}, 0.0), ConfigError);
}

TEST(TimeFeatures, Bounded) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  std::vector<double> ts(1000);
  for (auto& t : ts) t = u(rng);
  EXPECT_LE(io::sine_time_features(ts, 288.0).cwiseAbs().maxCoeff(), 1.0);
}

TEST(TimeFeatures, AppendedAfterObservationAndExcludedFromTargets) {
  const auto d = small_stream();
  EXPECT_EQ(d.sequence.features.front().cols(), 3);
  EXPECT_EQ(d.target_channels, (std::vector<ad::Index>{0}));
  const auto withdelta = io::with_delta_feature(d);
  EXPECT_EQ(withdelta.sequence.features[2].cols(), 4);
  EXPECT_EQ(withdelta.sequence.features[2](0, 3), 1.0);
  EXPECT_EQ(withdelta.sequence.features[0](0, 3), 0.0);
}
