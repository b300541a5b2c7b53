#include <doctest.h>

#include <random>

#include "dgd/diffusion.hpp"

using namespace dgd;
using namespace dgd::diffusion;
using dgd::geometry::Polygon;

namespace {

const Polygon kSquare{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};

Path line(Vec2 a, Vec2 b, int n) {
  Path p;
  for (int h = 0; h < n; ++h) p.push_back(a + (b - a) * (double(h) / (n - 1)));
  return p;
}

// Straight lines in the unit square, trained once for the sampler tests.
const ScoreModel& line_model() {
  static const ScoreModel m = [] {
    TrainingSetConfig tc;
    tc.bezier_fraction = 0.0;
    const auto data = make_training_set(std::vector<Polygon>{kSquare}, 5000, 1, tc);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.lr = 1e-3;
    return train_score(data, cfg);
  }();
  return m;
}

assign::Subproblem single_segment(const Polygon& region, const Path& waypoints) {
  assign::Subproblem sub;
  sub.polygon = region;
  assign::Segment s;
  s.h_enter = 0;
  s.h_exit = int(waypoints.size()) - 1;
  s.pos_enter = waypoints.front();
  s.pos_exit = waypoints.back();
  s.waypoints = waypoints;
  sub.segments.push_back(s);
  sub.horizon = s.h_exit;
  return sub;
}

}  // namespace

TEST_CASE("resample and region frame") {
  const Path p{{0, 0}, {1, 0}, {1, 1}};
  const Path r = resample(p, 5);
  REQUIRE(r.size() == 5);
  CHECK(r[1] == Vec2{0.5, 0});
  CHECK(r[2] == Vec2{1, 0});
  CHECK(r[3] == Vec2{1, 0.5});
  CHECK(resample(r, 3) == p);
  const auto f = region_frame(kSquare);
  CHECK(f.center.x == doctest::Approx(0.5));
  CHECK(f.scale == doctest::Approx(std::sqrt(0.5)));
  const auto d = region_descriptor(kSquare);
  REQUIRE(d.size() == 2 * kDescriptorPoints);
  CHECK(d[0] == doctest::Approx(-1 / std::sqrt(2.0)));  // first vertex
  CHECK(d[2] == doctest::Approx(0.0));                  // midpoint of the bottom edge
  CHECK(d[3] == doctest::Approx(-1 / std::sqrt(2.0)));
}

TEST_CASE("make_training_set: shapes, containment, speed, determinism") {
  TrainingSetConfig tc;
  tc.horizon = 8;
  tc.max_step = 0.2;
  tc.bezier_fraction = 0.0;
  const auto lines = make_training_set(std::vector<Polygon>{kSquare}, 200, 7, tc);
  for (const auto& s : lines.samples) {
    REQUIRE(s.traj.size() == 8);
    const Path ideal = line(s.traj.front(), s.traj.back(), 8);
    for (std::size_t h = 0; h < 8; ++h) CHECK(distance(s.traj[h], ideal[h]) <= 1e-12);
  }
  const Polygon tri{{{0, 0}, {2, 0}, {0, 1}}};
  tc.bezier_fraction = 0.5;
  tc.max_step = 0.05;
  const auto a = make_training_set(std::vector<Polygon>{kSquare, tri}, 300, 7, tc);
  const auto b = make_training_set(std::vector<Polygon>{kSquare, tri}, 300, 7, tc);
  REQUIRE(a.samples.size() == 300);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const auto& s = a.samples[i];
    CHECK(s.traj == b.samples[i].traj);
    for (std::size_t h = 0; h < s.traj.size(); ++h) {
      CHECK(geometry::contains(a.regions[std::size_t(s.region)], s.traj[h]));
      if (h + 1 < s.traj.size()) CHECK(distance(s.traj[h], s.traj[h + 1]) <= 0.05 + 1e-12);
    }
  }
}

TEST_CASE("cosine schedule") {
  const auto s = cosine_schedule(25);
  REQUIRE(s.steps() == 25);
  for (int t = 0; t < 25; ++t) {
    CHECK(s.beta[std::size_t(t)] > 0.0);
    CHECK(s.beta[std::size_t(t)] < 1.0);
    if (t > 0) CHECK(s.beta[std::size_t(t)] > s.beta[std::size_t(t - 1)]);
  }
  CHECK(s.sigma(1) < s.sigma(25));
  CHECK_THROWS_AS(s.sigma(0), InvalidInput);
}

TEST_CASE("train_score: memorization, zero epochs, divergence") {
  const auto one = make_training_set(std::vector<Polygon>{kSquare}, 1, 3);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.holdout = 0.0;
  TrainReport rep;
  train_score(one, cfg, &rep);
  REQUIRE(rep.train_loss.size() == 200);
  CHECK(rep.train_loss.back() < 0.5 * rep.initial_train_loss);

  cfg.epochs = 0;
  TrainReport zero;
  const auto m0 = train_score(one, cfg, &zero);
  const auto m1 = train_score(one, cfg);
  CHECK(zero.train_loss.empty());
  REQUIRE(m0.W.size() == 4);
  for (std::size_t l = 0; l < m0.W.size(); ++l) CHECK(m0.W[l] == m1.W[l]);
  CHECK(m0.W[0].rows() == 128);
  CHECK(m0.W[0].cols() == m0.input_dim());
  CHECK(m0.W.back().rows() == m0.output_dim());

  cfg.epochs = 3;
  cfg.lr = 1e300;
  CHECK_THROWS_AS(train_score(make_training_set(std::vector<Polygon>{kSquare}, 200, 3), cfg), DivergedTraining);
  CHECK_THROWS_AS(train_score(Dataset{{kSquare}, {}}, TrainConfig{}), InvalidInput);
}

TEST_CASE("train_score: held-out loss falls over windows of five epochs") {
  const Polygon tri{{{0, 0}, {2, 0}, {0, 1}}};
  const Polygon hex{{{3, 0}, {4, 0}, {4.5, 0.8}, {4, 1.6}, {3, 1.6}, {2.5, 0.8}}};
  const auto data = make_training_set(std::vector<Polygon>{kSquare, tri, hex}, 5000, 0);
  TrainConfig cfg;
  cfg.epochs = 20;
  TrainReport rep;
  train_score(data, cfg, &rep);
  REQUIRE(rep.heldout_loss.size() == 20);
  CHECK(rep.heldout_loss.back() < rep.heldout_loss.front());
  double prev = 1e300;
  for (int w = 0; w < 4; ++w) {
    double avg = 0;
    for (int e = 5 * w; e < 5 * w + 5; ++e) avg += rep.heldout_loss[std::size_t(e)] / 5;
    CHECK(avg < prev);
    prev = avg;
  }
}

TEST_CASE("checkpoint round trip") {
  const auto data = make_training_set(std::vector<Polygon>{kSquare}, 50, 3);
  TrainConfig cfg;
  cfg.epochs = 1;
  const auto m = train_score(data, cfg);
  const auto r = ScoreModel::from_json(m.to_json());
  REQUIRE(r.W.size() == m.W.size());
  for (std::size_t l = 0; l < m.W.size(); ++l) {
    CHECK(r.W[l] == m.W[l]);
    CHECK(r.b[l] == m.b[l]);
  }
  CHECK(r.schedule().alpha_bar == m.schedule().alpha_bar);
  std::string text = m.to_json();
  const auto pos = text.find("\"schema_version\":1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 18, "\"schema_version\":9");
  CHECK_THROWS_AS(ScoreModel::from_json(text), IoError);
  CHECK_THROWS_AS(ScoreModel::from_json("{not json"), IoError);
  CHECK_THROWS_AS(ScoreModel::load("/nonexistent/model.ckpt"), IoError);
}

TEST_CASE("sample_subproblem: containment, endpoint clamping, determinism") {
  const Polygon tri{{{0, 0}, {1, 0}, {0.2, 0.9}}};
  assign::Subproblem sub;
  sub.polygon = tri;
  for (int k = 0; k < 3; ++k) {
    assign::Segment s;
    s.robot = k;
    s.h_enter = 4 * k;
    s.h_exit = 4 * k + 6 + 9 * k;
    s.pos_enter = Vec2{0.1 + 0.2 * k, 0.0};
    s.pos_exit = tri[1] + (tri[2] - tri[1]) * (0.3 + 0.2 * k);
    s.waypoints = line(s.pos_enter, s.pos_exit, s.h_exit - s.h_enter + 1);
    sub.segments.push_back(s);
  }
  for (bool warm : {true, false})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      SamplerConfig cfg;
      cfg.warm_start = warm;
      cfg.temperature = 2.0;
      cfg.seed = seed;
      const auto out = sample_subproblem(sub, line_model(), cfg, {});
      REQUIRE(out.size() == 3);
      for (std::size_t k = 0; k < 3; ++k) {
        const auto& seg = sub.segments[k];
        REQUIRE(int(out[k].size()) == seg.h_exit - seg.h_enter + 1);
        CHECK(distance(out[k].front(), seg.pos_enter) <= 1e-12);
        CHECK(distance(out[k].back(), seg.pos_exit) <= 1e-12);
        for (const auto& w : out[k]) CHECK(geometry::signed_outside_distance(tri, w) <= 1e-9);
      }
      CHECK(out == sample_subproblem(sub, line_model(), cfg, {}));
    }
}

TEST_CASE("sample_subproblem: fixed-point mode") {
  const auto sub = single_segment(kSquare, line({0.1, 0.2}, {0.8, 0.6}, 23));
  SamplerConfig cfg;
  cfg.eta = 1e-12;
  cfg.temperature = 0.0;
  const auto out = sample_subproblem(sub, line_model(), cfg, {});
  for (std::size_t h = 0; h < out[0].size(); ++h) CHECK(distance(out[0][h], sub.segments[0].waypoints[h]) <= 1e-9);
}

TEST_CASE("sample_subproblem: trained model denoises straight lines") {
  double total = 0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    std::normal_distribution<double> z(0.0, 0.05);
    const Vec2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
    const Path clean = line(a, b, kModelHorizon);
    Path noisy = clean;
    for (std::size_t h = 1; h + 1 < noisy.size(); ++h) noisy[h] += Vec2{z(rng), z(rng)};
    const auto sub = single_segment(kSquare, noisy);
    SamplerConfig cfg;
    cfg.seed = seed;
    const auto out = sample_subproblem(sub, line_model(), cfg, {});
    for (std::size_t h = 0; h < clean.size(); ++h) {
      total += distance(out[0][h], clean[h]);
      ++n;
    }
  }
  CHECK(total / n <= 0.03);
}

TEST_CASE("sample_subproblem: guidance separates a crossing pair") {
  assign::Subproblem sub;
  sub.polygon = kSquare;
  sub.limits.r_agent = 0.2;
  const Path p0 = line({0.1, 0.5}, {0.9, 0.5}, 16), p1 = line({0.5, 0.1}, {0.5, 0.9}, 16);
  for (int k = 0; k < 2; ++k) {
    assign::Segment s;
    s.robot = k;
    s.h_exit = 15;
    s.waypoints = k ? p1 : p0;
    s.pos_enter = s.waypoints.front();
    s.pos_exit = s.waypoints.back();
    sub.segments.push_back(s);
  }
  SamplerConfig cfg;
  cfg.temperature = 0.0;
  const auto plain = sample_subproblem(sub, line_model(), [&] {
    auto c = cfg;
    c.guidance_weight = 0.0;
    return c;
  }(), {});
  cfg.guidance_weight = 50.0;
  const auto guided = sample_subproblem(sub, line_model(), cfg, {});
  CHECK(penalty_agents_total(guided, 0.2) < penalty_agents_total(plain, 0.2));
}
