#include "okd/distill/nets.hpp"

#include "okd/errors.hpp"

namespace okd::distill {

using nn::Dims;

namespace {
constexpr size_t kConv1Channels = 16;
constexpr size_t kConv2Channels = 32;
constexpr size_t kKernel = 5;
constexpr size_t kStride = 2;
constexpr size_t kCameras = 4;

// Checks [batch, d1, d2] with any batch size.
void expect_batched(const Tensor& t, size_t d1, size_t d2, const char* what) {
  nn::expect_dims(t, {t.rank() == 3 ? t.dim(0) : 0, d1, d2}, what);
}
}  // namespace

ImageEncoder::ImageEncoder(size_t channels, size_t rays, size_t embed)
    : conv1(channels, kConv1Channels, kKernel, kStride),
      conv2(kConv1Channels, kConv2Channels, kKernel, kStride),
      channels_(channels),
      rays_(rays) {
  const size_t l1 = conv1.out_length(rays);
  const size_t l2 = conv2.out_length(l1);
  flat_ = kConv2Channels * l2;
  fc = nn::Dense(flat_, embed);
}

Tensor ImageEncoder::forward(const Tensor& x, Cache* cache) const {
  expect_batched(x, channels_, rays_, "image encoder input");
  const size_t batch = x.dim(0);
  Tensor a1 = conv1.forward(x, cache ? &cache->c1 : nullptr);
  Tensor a2 = conv2.forward(nn::relu(a1), cache ? &cache->c2 : nullptr);
  Tensor flat = nn::relu(a2).reshaped({batch, flat_});
  Tensor y = fc.forward(flat, cache ? &cache->fc : nullptr);
  if (cache) {
    cache->a1 = std::move(a1);
    cache->a2 = std::move(a2);
  }
  return y;
}

Tensor ImageEncoder::backward(const Cache& cache, const Tensor& grad_out) {
  Tensor g = fc.backward(cache.fc, grad_out).reshaped(cache.a2.dims());
  g = conv2.backward(cache.c2, nn::relu_backward(cache.a2, g));
  return conv1.backward(cache.c1, nn::relu_backward(cache.a1, g));
}

void ImageEncoder::init(std::mt19937_64& rng) {
  conv1.init(rng);
  conv2.init(rng);
  fc.init(rng);
}

void ImageEncoder::zero_grad() {
  conv1.zero_grad();
  conv2.zero_grad();
  fc.zero_grad();
}

void ImageEncoder::collect(std::vector<ParamRef>& out, const std::string& prefix, int group) {
  conv1.collect(out, prefix + ".conv1", group);
  conv2.collect(out, prefix + ".conv2", group);
  fc.collect(out, prefix + ".fc", group);
}

Mlp::Mlp(size_t in, size_t hidden, size_t out) : d1(in, hidden), d2(hidden, out) {}

Tensor Mlp::forward(const Tensor& x, Cache* cache) const {
  Tensor h = d1.forward(x, cache ? &cache->d1 : nullptr);
  Tensor y = d2.forward(nn::relu(h), cache ? &cache->d2 : nullptr);
  if (cache) cache->h = std::move(h);
  return y;
}

Tensor Mlp::backward(const Cache& cache, const Tensor& grad_out) {
  const Tensor g = d2.backward(cache.d2, grad_out);
  return d1.backward(cache.d1, nn::relu_backward(cache.h, g));
}

void Mlp::init(std::mt19937_64& rng) {
  d1.init(rng);
  d2.init(rng);
}

void Mlp::zero_grad() {
  d1.zero_grad();
  d2.zero_grad();
}

void Mlp::collect(std::vector<ParamRef>& out, const std::string& prefix, int group) {
  d1.collect(out, prefix + ".0", group);
  d2.collect(out, prefix + ".1", group);
}

// ---------------------------------------------------------------- teacher

TeacherNet::TeacherNet(const NetConfig& cfg, std::uint64_t seed)
    : encoder(1, cfg.rays, cfg.embed),
      goal_encoder(2, cfg.goal_embed, cfg.goal_embed),
      lp(kCameras * cfg.embed + cfg.goal_embed, cfg.embed),
      head(cfg.embed, cfg.head_hidden, 3),
      cfg_(cfg) {
  std::mt19937_64 rng(seed);
  encoder.init(rng);
  goal_encoder.init(rng);
  lp.init(rng);
  head.init(rng);
}

NetOutput TeacherNet::forward(const Tensor& depth, const Tensor& goal, Cache* cache) const {
  expect_batched(depth, kCameras, cfg_.rays, "teacher depth");
  const size_t batch = depth.dim(0);
  nn::expect_dims(goal, {batch, 2}, "teacher goal");

  // Each camera part goes through the same encoder as its own batch row.
  const Tensor parts = depth.reshaped({batch * kCameras, 1, cfg_.rays});
  const Tensor part_z = encoder.forward(parts, cache ? &cache->enc : nullptr)
                            .reshaped({batch, kCameras * cfg_.embed});
  const Tensor goal_z = goal_encoder.forward(goal, cache ? &cache->goal : nullptr);
  NetOutput out;
  out.z = lp.forward(nn::concat_cols({&part_z, &goal_z}), cache ? &cache->lp : nullptr);
  out.action = head.forward(out.z, cache ? &cache->head : nullptr);
  if (cache) cache->batch = batch;
  return out;
}

void TeacherNet::backward(const Cache& cache, const Tensor& grad_z, const Tensor& grad_action) {
  Tensor gz = grad_z.size() ? grad_z : Tensor({cache.batch, cfg_.embed});
  if (grad_action.size()) {
    const Tensor g = head.backward(cache.head, grad_action);
    for (size_t i = 0; i < gz.size(); ++i) gz[i] += g[i];
  }
  const Tensor gcat = lp.backward(cache.lp, gz);
  auto split = nn::split_cols(gcat, {kCameras * cfg_.embed, cfg_.goal_embed});
  goal_encoder.backward(cache.goal, split[1]);
  encoder.backward(cache.enc, split[0].reshaped({cache.batch * kCameras, cfg_.embed}));
}

std::vector<ParamRef> TeacherNet::parameters() {
  std::vector<ParamRef> out;
  encoder.collect(out, "teacher.encoder", kEncoderGroup);
  goal_encoder.collect(out, "teacher.goal", kActionGroup);
  lp.collect(out, "teacher.lp", kActionGroup);
  head.collect(out, "teacher.head", kActionGroup);
  return out;
}

void TeacherNet::zero_grad() {
  encoder.zero_grad();
  goal_encoder.zero_grad();
  lp.zero_grad();
  head.zero_grad();
}

// ---------------------------------------------------------------- student

StudentNet::StudentNet(const NetConfig& cfg, std::uint64_t seed)
    : encoder(3, cfg.rays, cfg.embed),
      goal_encoder(2, cfg.goal_embed, cfg.goal_embed),
      fusion(cfg.embed + cfg.goal_embed, cfg.embed),
      lstm(cfg.embed, cfg.embed),
      head(cfg.embed, cfg.head_hidden, 3),
      cfg_(cfg) {
  std::mt19937_64 rng(seed);
  encoder.init(rng);
  goal_encoder.init(rng);
  fusion.init(rng);
  lstm.init(rng);
  head.init(rng);
}

NetOutput StudentNet::forward(const Tensor& rgb, const Tensor& goal, Cache* cache) const {
  if (rgb.rank() != 4) {
    throw ShapeError("student rgb: expected [batch, L, 3, W], got " + nn::dims_to_string(rgb.dims()));
  }
  const size_t batch = rgb.dim(0);
  const size_t L = static_cast<size_t>(cfg_.seq_len);
  if (rgb.dim(1) != L || (goal.rank() == 3 && goal.dim(1) != L)) {
    throw SequenceLengthError("student expects sequences of length " + std::to_string(L) +
                              ", got " + std::to_string(rgb.dim(1)));
  }
  nn::expect_dims(rgb, {batch, L, 3, cfg_.rays}, "student rgb");
  nn::expect_dims(goal, {batch, L, 2}, "student goal");

  // All frames are encoded in one pass; rows are ordered b * L + t.
  const size_t rows = batch * L;
  const Tensor img_z = encoder.forward(rgb.reshaped({rows, 3, cfg_.rays}),
                                       cache ? &cache->enc : nullptr);
  const Tensor goal_z = goal_encoder.forward(goal.reshaped({rows, 2}),
                                             cache ? &cache->goal : nullptr);
  Tensor fused_pre = fusion.forward(nn::concat_cols({&img_z, &goal_z}),
                                    cache ? &cache->fusion : nullptr);
  const Tensor fused = nn::relu(fused_pre);

  const size_t E = cfg_.embed;
  nn::LstmCell::State state = lstm.zero_state(batch);
  if (cache) cache->steps.assign(L, {});
  Tensor xt({batch, E});
  for (size_t t = 0; t < L; ++t) {
    for (size_t b = 0; b < batch; ++b) {
      std::copy_n(fused.data() + (b * L + t) * E, E, xt.data() + b * E);
    }
    state = lstm.forward(xt, state, cache ? &cache->steps[t] : nullptr);
  }
  NetOutput out;
  out.z = std::move(state.h);
  out.action = head.forward(out.z, cache ? &cache->head : nullptr);
  if (cache) {
    cache->batch = batch;
    cache->fused_pre = std::move(fused_pre);
  }
  return out;
}

void StudentNet::backward(const Cache& cache, const Tensor& grad_z, const Tensor& grad_action) {
  const size_t batch = cache.batch;
  const size_t L = cache.steps.size();
  const size_t E = cfg_.embed;
  Tensor gh = grad_z.size() ? grad_z : Tensor({batch, E});
  if (grad_action.size()) {
    const Tensor g = head.backward(cache.head, grad_action);
    for (size_t i = 0; i < gh.size(); ++i) gh[i] += g[i];
  }
  Tensor gc({batch, E});
  Tensor g_fused({batch * L, E});
  for (size_t t = L; t-- > 0;) {
    auto g = lstm.backward(cache.steps[t], gh, gc);
    for (size_t b = 0; b < batch; ++b) {
      std::copy_n(g.x.data() + b * E, E, g_fused.data() + (b * L + t) * E);
    }
    gh = std::move(g.h_prev);
    gc = std::move(g.c_prev);
  }
  const Tensor gcat = fusion.backward(cache.fusion, nn::relu_backward(cache.fused_pre, g_fused));
  auto split = nn::split_cols(gcat, {E, cfg_.goal_embed});
  goal_encoder.backward(cache.goal, split[1]);
  encoder.backward(cache.enc, split[0]);
}

std::vector<ParamRef> StudentNet::parameters() {
  std::vector<ParamRef> out;
  encoder.collect(out, "student.encoder", kEncoderGroup);
  goal_encoder.collect(out, "student.goal", kActionGroup);
  fusion.collect(out, "student.fusion", kActionGroup);
  lstm.collect(out, "student.lstm", kActionGroup);
  head.collect(out, "student.head", kActionGroup);
  return out;
}

void StudentNet::zero_grad() {
  encoder.zero_grad();
  goal_encoder.zero_grad();
  fusion.zero_grad();
  lstm.zero_grad();
  head.zero_grad();
}

// ---------------------------------------------------------------- unbatched

sim::Action to_action(const Tensor& actions, size_t row) {
  return {actions[row * 3], actions[row * 3 + 1], actions[row * 3 + 2]};
}

Embedded teacher_forward(const TeacherNet& net, const std::vector<double>& omni_depth,
                         sim::Vec2 goal_local) {
  const size_t W = net.config().rays;
  if (omni_depth.size() != kCameras * W) {
    throw ShapeError("omni depth: expected " + std::to_string(kCameras * W) + " values, got " +
                     std::to_string(omni_depth.size()));
  }
  const NetOutput o = net.forward(Tensor({1, kCameras, W}, omni_depth),
                                  Tensor({1, 2}, {goal_local.x, goal_local.y}));
  return {o.z.storage(), to_action(o.action, 0)};
}

Embedded student_forward(const StudentNet& net, const std::vector<std::vector<double>>& rgb_seq,
                         const std::vector<sim::Vec2>& goal_seq) {
  const size_t W = net.config().rays;
  const size_t L = rgb_seq.size();
  if (goal_seq.size() != L) throw ShapeError("rgb and goal sequences differ in length");
  Tensor rgb({1, L, 3, W});
  Tensor goal({1, L, 2});
  for (size_t t = 0; t < L; ++t) {
    if (rgb_seq[t].size() != 3 * W) {
      throw ShapeError("rgb frame: expected " + std::to_string(3 * W) + " values, got " +
                       std::to_string(rgb_seq[t].size()));
    }
    std::copy(rgb_seq[t].begin(), rgb_seq[t].end(), rgb.data() + t * 3 * W);
    goal[t * 2] = goal_seq[t].x;
    goal[t * 2 + 1] = goal_seq[t].y;
  }
  const NetOutput o = net.forward(rgb, goal);
  return {o.z.storage(), to_action(o.action, 0)};
}

}  // namespace okd::distill
