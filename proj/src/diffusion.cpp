#include "dgd/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace dgd::diffusion {

using Eigen::MatrixXd;
using Eigen::VectorXd;

RegionFrame region_frame(const Polygon& region) {
  RegionFrame f;
  f.center = geometry::centroid(region);
  double r = 0.0;
  for (const auto& v : region.vertices) r = std::max(r, distance(v, f.center));
  f.scale = r > 0 ? r : 1.0;
  return f;
}

VectorXd region_descriptor(const Polygon& region) {
  const auto f = region_frame(region);
  const std::size_t n = region.size();
  std::vector<double> cum{0.0};
  for (std::size_t i = 0; i < n; ++i) cum.push_back(cum.back() + distance(region[i], region[(i + 1) % n]));
  VectorXd d(2 * kDescriptorPoints);
  std::size_t e = 0;
  for (int k = 0; k < kDescriptorPoints; ++k) {
    const double s = cum.back() * k / kDescriptorPoints;
    while (e + 1 < n && cum[e + 1] < s) ++e;
    const double len = cum[e + 1] - cum[e];
    const double u = len > 0 ? (s - cum[e]) / len : 0.0;
    const Vec2 p = f.to_local(region[e] + (region[(e + 1) % n] - region[e]) * u);
    d[2 * k] = p.x;
    d[2 * k + 1] = p.y;
  }
  return d;
}

Path resample(const Path& path, int n) {
  if (path.empty() || n <= 0) throw InvalidInput("resample needs a nonempty path and n > 0");
  Path out(static_cast<std::size_t>(n));
  if (path.size() == 1 || n == 1) {
    std::fill(out.begin(), out.end(), path.front());
    if (n > 1) out.back() = path.back();
    return out;
  }
  const double last = double(path.size() - 1);
  for (int k = 0; k < n; ++k) {
    const double s = last * k / (n - 1);
    const std::size_t i = std::min(std::size_t(s), path.size() - 2);
    out[std::size_t(k)] = path[i] + (path[i + 1] - path[i]) * (s - double(i));
  }
  out.back() = path.back();
  return out;
}

// --- training data -----------------------------------------------------------

namespace {

Vec2 sample_point(const Polygon& r, const geometry::Box& box, double boundary_fraction, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < boundary_fraction) {
    std::vector<double> cum{0.0};
    for (std::size_t i = 0; i < r.size(); ++i) cum.push_back(cum.back() + distance(r[i], r[(i + 1) % r.size()]));
    const double s = u(rng) * cum.back();
    std::size_t e = 0;
    while (e + 2 < cum.size() && cum[e + 1] < s) ++e;
    const double len = cum[e + 1] - cum[e];
    return r[e] + (r[(e + 1) % r.size()] - r[e]) * (len > 0 ? (s - cum[e]) / len : 0.0);
  }
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const Vec2 p{box.min.x + u(rng) * box.width(), box.min.y + u(rng) * box.height()};
    if (geometry::signed_outside_distance(r, p) <= 0.0) return p;
  }
  return geometry::centroid(r);
}

// Equal arc-length points along a dense polyline.
Path constant_speed(const Path& dense, int n) {
  std::vector<double> cum{0.0};
  for (std::size_t i = 0; i + 1 < dense.size(); ++i) cum.push_back(cum.back() + distance(dense[i], dense[i + 1]));
  Path out;
  std::size_t e = 0;
  for (int k = 0; k < n; ++k) {
    const double s = cum.back() * k / (n - 1);
    while (e + 2 < cum.size() && cum[e + 1] < s) ++e;
    const double len = cum[e + 1] - cum[e];
    out.push_back(dense[e] + (dense[e + 1] - dense[e]) * (len > 0 ? (s - cum[e]) / len : 0.0));
  }
  out.back() = dense.back();
  return out;
}

}  // namespace

Dataset make_training_set(const std::vector<Polygon>& regions, int count, std::uint64_t seed,
                          const TrainingSetConfig& cfg) {
  if (regions.empty()) throw InvalidInput("no regions");
  if (cfg.horizon < 2 || !(cfg.max_step > 0)) throw InvalidInput("bad training set configuration");
  Dataset data{regions, {}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, int(regions.size()) - 1);
  std::vector<geometry::Box> boxes;
  for (const auto& r : regions) boxes.push_back(geometry::bounding_box(r.vertices));
  const int H = cfg.horizon;
  for (int s = 0; s < count; ++s) {
    const int ri = pick(rng);
    const Polygon& r = regions[std::size_t(ri)];
    const Vec2 a = sample_point(r, boxes[std::size_t(ri)], cfg.boundary_fraction, rng);
    const Vec2 b = sample_point(r, boxes[std::size_t(ri)], cfg.boundary_fraction, rng);
    Path traj;
    if (u(rng) < cfg.bezier_fraction) {
      const Vec2 c = sample_point(r, boxes[std::size_t(ri)], 0.0, rng);
      Path dense;
      for (int k = 0; k <= 128; ++k) {
        const double t = k / 128.0;
        dense.push_back(a * ((1 - t) * (1 - t)) + c * (2 * t * (1 - t)) + b * (t * t));
      }
      traj = constant_speed(dense, H);
    } else {
      for (int k = 0; k < H; ++k) traj.push_back(a + (b - a) * (double(k) / (H - 1)));
    }
    // shrink toward the start until the speed limit holds; the region is convex
    double longest = 0.0;
    for (int k = 0; k + 1 < H; ++k) longest = std::max(longest, distance(traj[std::size_t(k)], traj[std::size_t(k + 1)]));
    if (longest > cfg.max_step) {
      const double f = cfg.max_step / longest;
      for (auto& p : traj) p = a + (p - a) * f;
    }
    data.samples.push_back({ri, std::move(traj)});
  }
  return data;
}

Dataset make_training_set(const decomp::ConvexPartition& partition, int count, std::uint64_t seed,
                          const TrainingSetConfig& cfg) {
  return make_training_set(partition.regions, count, seed, cfg);
}

// --- schedule and network ----------------------------------------------------

double NoiseSchedule::sigma(int t) const {
  if (t < 1 || t > steps()) throw InvalidInput("diffusion step out of range");
  return std::sqrt(1.0 - alpha_bar[std::size_t(t - 1)]);
}

NoiseSchedule cosine_schedule(int steps) {
  if (steps < 1) throw InvalidInput("schedule needs at least one step");
  const double s = 0.008;
  auto f = [&](double t) {
    const double c = std::cos((t / steps + s) / (1 + s) * std::numbers::pi / 2);
    return c * c;
  };
  NoiseSchedule sch;
  double prev = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double ab = f(t) / f(0);
    const double beta = std::clamp(1.0 - ab / prev, 1e-8, 0.999);
    const double clipped = prev * (1.0 - beta);
    sch.beta.push_back(beta);
    sch.alpha_bar.push_back(clipped);
    prev = clipped;
  }
  return sch;
}

namespace {

constexpr int kTimeFeatures = 3;
constexpr double kSigmaData = 0.5;

struct Precond {
  double skip, out, in;
};

// x0 estimate = skip * x + out * F(in * x)
Precond precond(double sigma) {
  const double d = sigma * sigma + kSigmaData * kSigmaData;
  return {kSigmaData * kSigmaData / d, sigma * kSigmaData / std::sqrt(d), 1.0 / std::sqrt(d)};
}

MatrixXd silu(const MatrixXd& z) { return z.array() / (1.0 + (-z.array()).exp()); }

MatrixXd silu_grad(const MatrixXd& z) {
  const auto s = 1.0 / (1.0 + (-z.array()).exp());
  return (s * (1.0 + z.array() * (1.0 - s))).matrix();
}

}  // namespace

ScoreModel::ScoreModel(int hidden, int layers, int steps, std::uint64_t seed) : schedule_(cosine_schedule(steps)) {
  if (hidden < 1 || layers < 1) throw InvalidInput("bad network shape");
  std::mt19937_64 rng(seed);
  std::vector<int> dims{input_dim()};
  for (int l = 0; l < layers; ++l) dims.push_back(hidden);
  dims.push_back(output_dim());
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double bound = std::sqrt(6.0 / (dims[l] + dims[l + 1]));
    std::uniform_real_distribution<double> u(-bound, bound);
    MatrixXd w(dims[l + 1], dims[l]);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    W.push_back(std::move(w));
    b.push_back(VectorXd::Zero(dims[l + 1]));
  }
}

int ScoreModel::input_dim() const { return 2 * kModelHorizon + 2 * kDescriptorPoints + kTimeFeatures; }

MatrixXd ScoreModel::features(const MatrixXd& traj, const MatrixXd& descriptor, const std::vector<int>& t) const {
  const Eigen::Index n = traj.cols();
  MatrixXd x(input_dim(), n);
  x.middleRows(2 * kModelHorizon, 2 * kDescriptorPoints) = descriptor;
  const double T = schedule_.steps();
  for (Eigen::Index c = 0; c < n; ++c) {
    x.col(c).head(2 * kModelHorizon) = traj.col(c) * precond(schedule_.sigma(t[std::size_t(c)])).in;
    const double tau = t[std::size_t(c)] / T;
    x(input_dim() - 3, c) = tau;
    x(input_dim() - 2, c) = std::sin(std::numbers::pi * tau);
    x(input_dim() - 1, c) = std::cos(std::numbers::pi * tau);
  }
  return x;
}

MatrixXd ScoreModel::denoise(const MatrixXd& traj, const MatrixXd& descriptor, const std::vector<int>& t) const {
  MatrixXd h = features(traj, descriptor, t);
  for (std::size_t l = 0; l < W.size(); ++l) {
    MatrixXd z = W[l] * h;
    z.colwise() += b[l];
    h = l + 1 < W.size() ? silu(z) : z;
  }
  for (Eigen::Index c = 0; c < h.cols(); ++c) {
    const Precond p = precond(schedule_.sigma(t[std::size_t(c)]));
    h.col(c) = p.skip * traj.col(c) + p.out * h.col(c);
  }
  // endpoints are conditioning, not denoised
  h.topRows(2) = traj.topRows(2);
  h.bottomRows(2) = traj.bottomRows(2);
  return h;
}

MatrixXd ScoreModel::predict_noise(const MatrixXd& traj, const MatrixXd& descriptor, const std::vector<int>& t) const {
  MatrixXd eps = traj - denoise(traj, descriptor, t);
  for (Eigen::Index c = 0; c < eps.cols(); ++c) eps.col(c) /= schedule_.sigma(t[std::size_t(c)]);
  return eps;
}

VectorXd ScoreModel::predict_x0(const VectorXd& traj, const VectorXd& descriptor, int t) const {
  return denoise(traj, descriptor, {t});
}

std::string ScoreModel::to_json() const {
  nlohmann::json j;
  j["schema_version"] = kCheckpointSchema;
  j["horizon"] = kModelHorizon;
  j["descriptor_points"] = kDescriptorPoints;
  j["steps"] = schedule_.steps();
  j["alpha_bar"] = schedule_.alpha_bar;
  j["layers"] = nlohmann::json::array();
  for (std::size_t l = 0; l < W.size(); ++l) {
    std::vector<double> w(std::size_t(W[l].size()));
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(w.data(), W[l].rows(),
                                                                                        W[l].cols()) = W[l];
    j["layers"].push_back({{"rows", W[l].rows()},
                           {"cols", W[l].cols()},
                           {"W", w},
                           {"b", std::vector<double>(b[l].data(), b[l].data() + b[l].size())}});
  }
  return j.dump();
}

ScoreModel ScoreModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kCheckpointSchema) throw IoError("unsupported checkpoint schema");
    if (j.at("horizon").get<int>() != kModelHorizon || j.at("descriptor_points").get<int>() != kDescriptorPoints)
      throw IoError("checkpoint shape does not match this build");
    ScoreModel m;
    m.schedule_ = cosine_schedule(j.at("steps").get<int>());
    int expect = m.input_dim();
    for (const auto& layer : j.at("layers")) {
      const int rows = layer.at("rows").get<int>(), cols = layer.at("cols").get<int>();
      const auto w = layer.at("W").get<std::vector<double>>();
      const auto bias = layer.at("b").get<std::vector<double>>();
      if (cols != expect || int(w.size()) != rows * cols || int(bias.size()) != rows)
        throw IoError("checkpoint layer dimensions are inconsistent");
      m.W.push_back(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          w.data(), rows, cols));
      m.b.push_back(Eigen::Map<const VectorXd>(bias.data(), rows));
      expect = rows;
    }
    if (m.W.empty() || expect != m.output_dim()) throw IoError("checkpoint output dimension mismatch");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed checkpoint: ") + e.what());
  }
}

void ScoreModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << to_json();
  if (!out) throw IoError("cannot write " + path);
}

ScoreModel ScoreModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

// --- training -----------------------------------------------------------------

struct Trainer {
  ScoreModel& m;
  std::vector<MatrixXd> mW, vW;
  std::vector<VectorXd> mb, vb;
  double lr;
  long step = 0;

  Trainer(ScoreModel& model, double lr_) : m(model), lr(lr_) {
    for (std::size_t l = 0; l < m.W.size(); ++l) {
      mW.push_back(MatrixXd::Zero(m.W[l].rows(), m.W[l].cols()));
      vW.push_back(mW.back());
      mb.push_back(VectorXd::Zero(m.b[l].size()));
      vb.push_back(mb.back());
    }
  }

  // Mean squared error of the preconditioned target per coordinate; updates parameters when `learn`.
  double run(const MatrixXd& x0, const MatrixXd& desc, const std::vector<int>& t, const MatrixXd& noise,
             bool learn) {
    const Eigen::Index n = x0.cols();
    MatrixXd xt = x0;
    for (Eigen::Index c = 0; c < n; ++c) xt.col(c) += m.schedule_.sigma(t[std::size_t(c)]) * noise.col(c);
    std::vector<MatrixXd> acts{m.features(xt, desc, t)}, pre;
    for (std::size_t l = 0; l < m.W.size(); ++l) {
      MatrixXd z = m.W[l] * acts.back();
      z.colwise() += m.b[l];
      pre.push_back(z);
      acts.push_back(l + 1 < m.W.size() ? silu(z) : z);
    }
    MatrixXd target(x0.rows(), n);
    for (Eigen::Index c = 0; c < n; ++c) {
      const Precond p = precond(m.schedule_.sigma(t[std::size_t(c)]));
      target.col(c) = (x0.col(c) - p.skip * xt.col(c)) / p.out;
    }
    MatrixXd diff = acts.back() - target;
    diff.topRows(2).setZero();
    diff.bottomRows(2).setZero();
    const double loss = diff.squaredNorm() / double(diff.size() - 4 * n);
    if (!learn || !std::isfinite(loss)) return loss;
    MatrixXd delta = diff * (2.0 / double(diff.size() - 4 * n));
    ++step;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, double(step)), c2 = 1.0 - std::pow(b2, double(step));
    for (std::size_t l = m.W.size(); l-- > 0;) {
      const MatrixXd gW = delta * acts[l].transpose();
      const VectorXd gb = delta.rowwise().sum();
      if (l > 0) delta = (m.W[l].transpose() * delta).cwiseProduct(silu_grad(pre[l - 1]));
      mW[l] = b1 * mW[l] + (1 - b1) * gW;
      vW[l] = b2 * vW[l] + (1 - b2) * gW.cwiseAbs2();
      mb[l] = b1 * mb[l] + (1 - b1) * gb;
      vb[l] = b2 * vb[l] + (1 - b2) * gb.cwiseAbs2();
      m.W[l].array() -= lr * (mW[l].array() / c1) / ((vW[l].array() / c2).sqrt() + eps);
      m.b[l].array() -= lr * (mb[l].array() / c1) / ((vb[l].array() / c2).sqrt() + eps);
    }
    return loss;
  }
};

namespace {

struct Encoded {
  MatrixXd x0;
  MatrixXd desc;
};

Encoded encode(const Dataset& data, const std::vector<std::size_t>& idx) {
  std::vector<RegionFrame> frames;
  std::vector<VectorXd> descs;
  for (const auto& r : data.regions) {
    frames.push_back(region_frame(r));
    descs.push_back(region_descriptor(r));
  }
  Encoded e{MatrixXd(2 * kModelHorizon, Eigen::Index(idx.size())),
            MatrixXd(2 * kDescriptorPoints, Eigen::Index(idx.size()))};
  for (std::size_t c = 0; c < idx.size(); ++c) {
    const auto& s = data.samples[idx[c]];
    const auto& f = frames[std::size_t(s.region)];
    const Path p = resample(s.traj, kModelHorizon);
    for (int k = 0; k < kModelHorizon; ++k) {
      const Vec2 q = f.to_local(p[std::size_t(k)]);
      e.x0(2 * k, Eigen::Index(c)) = q.x;
      e.x0(2 * k + 1, Eigen::Index(c)) = q.y;
    }
    e.desc.col(Eigen::Index(c)) = descs[std::size_t(s.region)];
  }
  return e;
}

struct NoiseDraw {
  std::vector<int> t;
  MatrixXd noise;
};

NoiseDraw draw_noise(Eigen::Index n, int steps, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(1, steps);
  std::normal_distribution<double> z(0.0, 1.0);
  NoiseDraw d{std::vector<int>(static_cast<std::size_t>(n)), MatrixXd(2 * kModelHorizon, n)};
  for (auto& t : d.t) t = pick(rng);
  for (Eigen::Index i = 0; i < d.noise.size(); ++i) d.noise.data()[i] = z(rng);
  // endpoints are clamped during sampling, so they stay clean here
  d.noise.topRows(2).setZero();
  d.noise.bottomRows(2).setZero();
  return d;
}

}  // namespace

ScoreModel train_score(const Dataset& data, const TrainConfig& cfg, TrainReport* report) {
  if (data.samples.empty()) throw InvalidInput("empty dataset");
  if (cfg.batch < 1 || !(cfg.lr > 0) || cfg.epochs < 0) throw InvalidInput("bad training configuration");
  std::mt19937_64 rng(cfg.seed);
  ScoreModel model(cfg.hidden, cfg.layers, cfg.steps, rng());

  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_hold = std::size_t(std::floor(cfg.holdout * double(order.size())));
  if (order.size() < 2) n_hold = 0;
  const std::vector<std::size_t> hold(order.begin(), order.begin() + long(n_hold));
  const std::vector<std::size_t> train(order.begin() + long(n_hold), order.end());

  const Encoded tr = encode(data, train);
  const Encoded ho = encode(data, hold);
  const NoiseDraw tr_fixed = draw_noise(tr.x0.cols(), cfg.steps, rng);
  const NoiseDraw ho_fixed = draw_noise(ho.x0.cols(), cfg.steps, rng);

  Trainer trainer(model, cfg.lr);
  auto eval = [&](const Encoded& e, const NoiseDraw& d) {
    return e.x0.cols() ? trainer.run(e.x0, e.desc, d.t, d.noise, false) : 0.0;
  };
  auto check = [](double loss) {
    if (!std::isfinite(loss)) throw DivergedTraining("training loss is not finite");
    return loss;
  };
  TrainReport rep;
  rep.initial_train_loss = check(eval(tr, tr_fixed));
  rep.initial_heldout_loss = check(eval(ho, ho_fixed));

  std::vector<std::size_t> perm(train.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t start = 0; start < perm.size(); start += std::size_t(cfg.batch)) {
      const std::size_t end = std::min(perm.size(), start + std::size_t(cfg.batch));
      const Eigen::Index n = Eigen::Index(end - start);
      MatrixXd x0(tr.x0.rows(), n), desc(tr.desc.rows(), n);
      for (Eigen::Index c = 0; c < n; ++c) {
        x0.col(c) = tr.x0.col(Eigen::Index(perm[start + std::size_t(c)]));
        desc.col(c) = tr.desc.col(Eigen::Index(perm[start + std::size_t(c)]));
      }
      const NoiseDraw d = draw_noise(n, cfg.steps, rng);
      check(trainer.run(x0, desc, d.t, d.noise, true));
    }
    rep.train_loss.push_back(check(eval(tr, tr_fixed)));
    rep.heldout_loss.push_back(check(eval(ho, ho_fixed)));
  }
  if (report) *report = std::move(rep);
  return model;
}

// --- sampling -----------------------------------------------------------------

std::vector<Path> sample_subproblem(const assign::Subproblem& sub, const ScoreModel& model,
                                    const SamplerConfig& cfg, std::span<const Obstacle> obstacles) {
  const auto& sch = model.schedule();
  if (cfg.steps < 1 || cfg.steps > sch.steps()) throw InvalidInput("sampler steps exceed the model schedule");
  if (!(cfg.eta > 0)) throw InvalidInput("step size must be positive");
  const auto& region = sub.polygon;
  const RegionFrame frame = region_frame(region);
  const VectorXd desc = region_descriptor(region);
  const auto& lim = sub.limits;
  const std::vector<double> margins = obstacle_margins(obstacles, lim.r_obs);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const std::size_t n_seg = sub.segments.size();

  // noise lives in the model's coarse space and is interpolated to the window
  auto noise = [&](std::size_t L) {
    Path coarse(kModelHorizon);
    for (auto& c : coarse) c = Vec2{z(rng), z(rng)};
    return resample(coarse, int(L));
  };

  int t0 = cfg.steps;
  if (cfg.warm_start) {
    t0 = 1;
    while (t0 < cfg.steps && sch.sigma(t0) < cfg.warm_sigma) ++t0;
  }

  // state in the region frame; `world` mirrors it after projection
  std::vector<Path> x(n_seg), world(n_seg);
  auto settle = [&](std::size_t k) {
    const auto& seg = sub.segments[k];
    Path& w = world[k];
    for (std::size_t h = 0; h < x[k].size(); ++h) w[h] = geometry::project_to_convex(frame.to_world(x[k][h]), region);
    w.front() = seg.pos_enter;
    w.back() = seg.pos_exit;
    for (std::size_t h = 0; h < x[k].size(); ++h) x[k][h] = frame.to_local(w[h]);
  };
  for (std::size_t k = 0; k < n_seg; ++k) {
    const auto& seg = sub.segments[k];
    const std::size_t L = std::size_t(seg.h_exit - seg.h_enter + 1);
    x[k].assign(L, Vec2{});
    world[k].assign(L, Vec2{});
    const double s0 = sch.sigma(t0) * cfg.temperature;
    const Path n0 = noise(L);
    for (std::size_t h = 0; h < L; ++h) {
      Vec2 base{};
      if (cfg.warm_start) {
        if (seg.waypoints.size() != L) throw LengthMismatch("segment waypoints do not match its window");
        base = frame.to_local(seg.waypoints[h]);
      }
      x[k][h] = base + n0[h] * s0;
    }
    settle(k);
  }

  for (int t = t0; t >= 1; --t) {
    const double sigma = sch.sigma(t);
    const double below = t > 1 ? sch.sigma(t - 1) : 0.0;
    const double eps = 2.0 * cfg.eta * (sigma * sigma - below * below);
    const double w = cfg.guidance_weight * double(t) / double(sch.steps());

    // guidance on the world-frame trajectories, scaled into the region frame
    std::vector<TimedPath> timed;
    for (std::size_t k = 0; k < n_seg; ++k) timed.push_back({sub.segments[k].h_enter, world[k]});
    std::vector<std::vector<Vec2>> ga;
    penalty_agents_timed(timed, lim.r_agent, &ga);

    for (std::size_t k = 0; k < n_seg; ++k) {
      const std::size_t L = x[k].size();
      const Path down = resample(x[k], kModelHorizon);
      VectorXd v(2 * kModelHorizon);
      for (int i = 0; i < kModelHorizon; ++i) {
        v[2 * i] = down[std::size_t(i)].x;
        v[2 * i + 1] = down[std::size_t(i)].y;
      }
      // the coarse estimate, interpolated to the window, is the denoised target
      const VectorXd x0 = model.predict_x0(v, desc, t);
      Path coarse(kModelHorizon);
      for (int i = 0; i < kModelHorizon; ++i) coarse[std::size_t(i)] = Vec2{x0[2 * i], x0[2 * i + 1]};
      const Path up = resample(coarse, int(L));
      const auto go = obstacles.empty() ? std::vector<Vec2>(L) : grad_penalty_obstacle(world[k], obstacles, margins);
      const Path nz = t > 1 ? noise(L) : Path(L);
      for (std::size_t h = 1; h + 1 < L; ++h) {
        const Vec2 J = (go[h] + ga[k][h]) * -frame.scale;
        // score = (x0 - x) / sigma^2
        Vec2 step = (up[h] - x[k][h]) * (0.5 * eps / (sigma * sigma)) + J * (0.5 * eps * w);
        // noise shrunk by sigma_{t-1}/sigma_t: the ancestral step of the same chain
        if (t > 1) step += nz[h] * (std::sqrt(eps) * cfg.temperature * below / sigma);
        x[k][h] += step;
      }
      settle(k);
    }
  }
  return world;
}

}  // namespace dgd::diffusion
