#include <doctest.h>

#include <filesystem>
#include <random>

#include "okd/errors.hpp"
#include "okd/nn/layers.hpp"
#include "okd/nn/optim.hpp"
#include "okd/nn/weights_io.hpp"
#include "oracles.hpp"

using namespace okd;
using namespace okd::nn;

namespace {

Tensor random_tensor(Dims dims, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(std::move(dims));
  std::normal_distribution<double> n(0.0, scale);
  for (auto& v : t.values()) v = n(rng);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Loss sum(out * w) makes the upstream gradient exactly w.
template <class Fwd>
void check_input_grad(Tensor& x, const Tensor& analytic, const Tensor& w, Fwd fwd) {
  double worst = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double num = oracle::numeric_partial([&] { return dot(fwd(x), w); }, x[i]);
    worst = std::max(worst, std::abs(num - analytic[i]) /
                                std::max({std::abs(num), std::abs(analytic[i]), 1e-8}));
  }
  CHECK(worst < 1e-4);
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("size follows dims") {
    Tensor t({2, 3, 4});
    CHECK(t.size() == 24);
    CHECK(t.rank() == 3);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>(3)), ShapeError);
    CHECK_THROWS_AS(t.reshaped({5, 5}), ShapeError);
    CHECK(t.reshaped({6, 4}).dims() == Dims{6, 4});
  }

  TEST_CASE("finiteness check") {
    Tensor t({2});
    CHECK(t.all_finite());
    t[1] = std::nan("");
    CHECK_FALSE(t.all_finite());
  }
}

TEST_SUITE("layer forward") {
  TEST_CASE("dense with identity weights passes input through") {
    Dense d(3, 3);
    d.weight = Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    d.bias = Tensor({3});
    const Tensor x({2, 3}, {1, 2, 3, -4, 5, -6});
    CHECK(d.forward(x) == x);

    Dense::Cache cache;
    d.forward(x, &cache);
    const Tensor g({2, 3}, {0.5, -1, 2, 3, 0, 1});
    CHECK(d.backward(cache, g) == g);
  }

  TEST_CASE("dense rejects the wrong width with both shapes in the message") {
    Dense d(3, 2);
    try {
      d.forward(Tensor({2, 4}));
      FAIL("expected a shape error");
    } catch (const ShapeError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[2, 4]") != std::string::npos);
      CHECK(msg.find("3") != std::string::npos);
    }
  }

  TEST_CASE("conv1d with a unit impulse kernel is the identity") {
    Conv1d c(1, 1, 5, 1, 2);
    c.weight = Tensor({1, 1, 5}, {0, 0, 1, 0, 0});
    c.bias = Tensor({1});
    const Tensor x({1, 1, 7}, {1, 2, 3, 4, 5, 6, 7});
    CHECK(c.forward(x) == x);
  }

  TEST_CASE("conv1d output length") {
    Conv1d c(3, 16, 5, 2);
    CHECK(c.out_length(64) == 30);
    CHECK(c.forward(Tensor({2, 3, 64})).dims() == Dims{2, 16, 30});
    CHECK_THROWS_AS(c.forward(Tensor({2, 4, 64})), ShapeError);
  }

  TEST_CASE("lstm with zero parameters and zero state outputs zero") {
    LstmCell cell(4, 3);
    cell.w_ih.fill(0);
    cell.w_hh.fill(0);
    cell.bias.fill(0);
    std::mt19937_64 rng(1);
    const auto s = cell.forward(random_tensor({2, 4}, rng), cell.zero_state(2));
    for (double v : s.h.values()) CHECK(v == 0.0);
    for (double v : s.c.values()) CHECK(v == 0.0);
  }

  TEST_CASE("lstm matches an unrolled reference over several steps") {
    std::mt19937_64 rng(2);
    const size_t in = 5, H = 4, T = 6;
    LstmCell cell(in, H);
    cell.init(rng);
    std::vector<double> h(H, 0.0), c(H, 0.0);
    auto state = cell.zero_state(1);
    for (size_t t = 0; t < T; ++t) {
      const Tensor x = random_tensor({1, in}, rng);
      state = cell.forward(x, state);
      oracle::lstm_step(cell.w_ih.storage(), cell.w_hh.storage(), cell.bias.storage(), in, H,
                        x.storage(), h, c);
    }
    for (size_t j = 0; j < H; ++j) {
      CHECK(state.h[j] == doctest::Approx(h[j]).epsilon(1e-12));
      CHECK(state.c[j] == doctest::Approx(c[j]).epsilon(1e-12));
    }
  }

  TEST_CASE("forward is pure") {
    std::mt19937_64 rng(3);
    Dense d(4, 2);
    d.init(rng);
    const Tensor x = random_tensor({3, 4}, rng);
    CHECK(d.forward(x) == d.forward(x));
  }

  TEST_CASE("l2norm gives unit rows and rejects zero rows") {
    std::mt19937_64 rng(4);
    const Tensor y = l2norm(random_tensor({5, 7}, rng));
    for (size_t r = 0; r < 5; ++r) {
      double n = 0;
      for (size_t k = 0; k < 7; ++k) n += y[r * 7 + k] * y[r * 7 + k];
      CHECK(n == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK_THROWS_AS(l2norm(Tensor({2, 3})), ZeroNormError);
  }

  TEST_CASE("init is seeded and within the fan-in bound") {
    std::mt19937_64 r1(9), r2(9);
    Dense a(16, 8), b(16, 8);
    a.init(r1);
    b.init(r2);
    CHECK(a.weight == b.weight);
    for (double v : a.weight.values()) CHECK(std::abs(v) <= 0.25);
  }
}

TEST_SUITE("layer backward") {
  TEST_CASE("relu passes gradient at positive inputs and blocks it at negative ones") {
    const Tensor x({1, 4}, {1.0, 2.0, -1.0, 0.5});
    const Tensor g({1, 4}, {3, 4, 5, 6});
    const Tensor gx = relu_backward(x, g);
    CHECK(gx[0] == 3);
    CHECK(gx[1] == 4);
    CHECK(gx[2] == 0);
    CHECK(gx[3] == 6);
  }

  TEST_CASE("dense parameter and input gradients match finite differences") {
    std::mt19937_64 rng(5);
    Dense d(6, 4);
    d.init(rng);
    Tensor x = random_tensor({8, 6}, rng);
    const Tensor w = random_tensor({8, 4}, rng);
    Dense::Cache cache;
    d.forward(x, &cache);
    d.zero_grad();
    const Tensor gx = d.backward(cache, w);
    std::vector<ParamRef> params;
    d.collect(params, "d", 0);
    const auto rep = finite_diff_check([&] { return dot(d.forward(x), w); }, params);
    CHECK(rep.max_relative_error < 1e-4);
    check_input_grad(x, gx, w, [&](const Tensor& in) { return d.forward(in); });
  }

  TEST_CASE("conv1d gradients match finite differences") {
    std::mt19937_64 rng(6);
    Conv1d c(3, 4, 5, 2, 1);
    c.init(rng);
    Tensor x = random_tensor({8, 3, 17}, rng);
    const Tensor y = c.forward(x);
    const Tensor w = random_tensor(y.dims(), rng);
    Conv1d::Cache cache;
    c.forward(x, &cache);
    c.zero_grad();
    const Tensor gx = c.backward(cache, w);
    std::vector<ParamRef> params;
    c.collect(params, "c", 0);
    CHECK(finite_diff_check([&] { return dot(c.forward(x), w); }, params).max_relative_error < 1e-4);
    check_input_grad(x, gx, w, [&](const Tensor& in) { return c.forward(in); });
  }

  TEST_CASE("lstm gradients match finite differences through h and c") {
    std::mt19937_64 rng(7);
    LstmCell cell(5, 4);
    cell.init(rng);
    const Tensor x = random_tensor({8, 5}, rng);
    LstmCell::State prev{random_tensor({8, 4}, rng), random_tensor({8, 4}, rng)};
    const Tensor wh = random_tensor({8, 4}, rng);
    const Tensor wc = random_tensor({8, 4}, rng);
    auto loss = [&] {
      const auto s = cell.forward(x, prev);
      return dot(s.h, wh) + dot(s.c, wc);
    };
    LstmCell::Cache cache;
    cell.forward(x, prev, &cache);
    cell.zero_grad();
    const auto g = cell.backward(cache, wh, wc);
    std::vector<ParamRef> params;
    cell.collect(params, "lstm", 0);
    CHECK(finite_diff_check(loss, params).max_relative_error < 1e-4);
    // Input, previous hidden and previous cell gradients.
    Tensor xv = x;
    auto loss_x = [&] {
      const auto s = cell.forward(xv, prev);
      return dot(s.h, wh) + dot(s.c, wc);
    };
    const std::pair<Tensor*, const Tensor*> checks[] = {
        {&xv, &g.x}, {&prev.h, &g.h_prev}, {&prev.c, &g.c_prev}};
    for (const auto& [value, analytic] : checks) {
      double worst = 0;
      for (size_t i = 0; i < value->size(); ++i) {
        const double num = oracle::numeric_partial(loss_x, (*value)[i]);
        worst = std::max(worst, std::abs(num - (*analytic)[i]) /
                                    std::max({std::abs(num), std::abs((*analytic)[i]), 1e-8}));
      }
      CHECK(worst < 1e-4);
    }
  }

  TEST_CASE("tanh and l2norm gradients match finite differences") {
    std::mt19937_64 rng(8);
    Tensor x = random_tensor({8, 6}, rng);
    const Tensor w = random_tensor({8, 6}, rng);
    check_input_grad(x, tanh_backward(tanh(x), w), w, [](const Tensor& in) { return tanh(in); });

    std::vector<double> norms;
    const Tensor y = l2norm(x, &norms);
    check_input_grad(x, l2norm_backward(y, norms, w), w,
                     [](const Tensor& in) { return l2norm(in); });
  }

  TEST_CASE("concat and split are inverse") {
    std::mt19937_64 rng(10);
    const Tensor a = random_tensor({3, 2}, rng);
    const Tensor b = random_tensor({3, 5}, rng);
    const Tensor ab = concat_cols({&a, &b});
    CHECK(ab.dims() == Dims{3, 7});
    const auto parts = split_cols(ab, {2, 5});
    CHECK(parts[0] == a);
    CHECK(parts[1] == b);
  }

  TEST_CASE("upstream gradient of the wrong shape is rejected") {
    Dense d(3, 2);
    Dense::Cache cache;
    d.forward(Tensor({2, 3}), &cache);
    CHECK_THROWS_AS(d.backward(cache, Tensor({2, 3})), ShapeError);
  }
}

TEST_SUITE("gradient checker") {
  TEST_CASE("half squared norm with its exact gradient") {
    Tensor p({4}, {0.3, -1.2, 2.0, 0.7});
    Tensor g = p;
    std::vector<ParamRef> params{{"p", &p, &g, 0}};
    auto loss = [&] {
      double s = 0;
      for (double v : p.values()) s += 0.5 * v * v;
      return s;
    };
    CHECK(finite_diff_check(loss, params).max_relative_error < 1e-8);
  }

  TEST_CASE("a doubled gradient is caught") {
    Tensor p({4}, {0.3, -1.2, 2.0, 0.7});
    Tensor g({4});
    for (size_t i = 0; i < 4; ++i) g[i] = 2.0 * p[i];
    std::vector<ParamRef> params{{"p", &p, &g, 0}};
    auto loss = [&] {
      double s = 0;
      for (double v : p.values()) s += 0.5 * v * v;
      return s;
    };
    const auto rep = finite_diff_check(loss, params);
    // |2g - g| / max(|2g|, |g|) with the max-magnitude denominator.
    CHECK(rep.max_relative_error == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(rep.worst_param == "p");
    CHECK(rep.entries_checked == 4);
  }

  TEST_CASE("subsampling checks the requested number of entries") {
    Tensor p({100});
    Tensor g({100});
    std::vector<ParamRef> params{{"p", &p, &g, 0}};
    GradCheckOptions o;
    o.max_entries_per_tensor = 10;
    CHECK(finite_diff_check([] { return 0.0; }, params, o).entries_checked == 10);
  }
}

TEST_SUITE("adam") {
  TEST_CASE("first step moves each entry by lr against the gradient sign") {
    Tensor p({3}, {1.0, 2.0, 3.0});
    Tensor g({3}, {0.5, -2.0, 1e-3});
    Adam opt({{"p", &p, &g, 0}}, {0.01});
    opt.step();
    CHECK(p[0] == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(2.01).epsilon(1e-6));
    CHECK(p[2] == doctest::Approx(2.99).epsilon(1e-4));
    CHECK(opt.step_count() == 1);
  }

  TEST_CASE("zero gradient leaves parameters unchanged") {
    Tensor p({2}, {1.0, -1.0});
    Tensor g({2});
    Adam opt({{"p", &p, &g, 0}}, {0.1});
    for (int i = 0; i < 5; ++i) opt.step();
    CHECK(p[0] == 1.0);
    CHECK(p[1] == -1.0);
  }

  TEST_CASE("groups use their own learning rate") {
    Tensor a({1}, {0.0}), ga({1}, {1.0});
    Tensor b({1}, {0.0}), gb({1}, {1.0});
    Adam opt({{"a", &a, &ga, 0}, {"b", &b, &gb, 1}}, {1e-5, 1e-4});
    opt.step();
    CHECK(a[0] == doctest::Approx(-1e-5).epsilon(1e-4));
    CHECK(b[0] == doctest::Approx(-1e-4).epsilon(1e-4));
    CHECK_THROWS_AS(Adam({{"a", &a, &ga, 2}}, {1e-3}), ConfigError);
  }

  TEST_CASE("non-finite gradient aborts without touching the state") {
    Tensor p({2}, {1.0, 2.0});
    Tensor g({2}, {0.1, 0.1});
    Adam opt({{"p", &p, &g, 0}}, {0.1});
    opt.step();
    const Tensor before = p;
    const auto m_before = opt.first_moments();
    g[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(opt.step(), NonFiniteError);
    CHECK(p == before);
    CHECK(opt.first_moments() == m_before);
    CHECK(opt.step_count() == 1);
  }

  TEST_CASE("identical seeds and data give identical parameter traces") {
    auto run = [] {
      std::mt19937_64 rng(12);
      Dense d(4, 2);
      d.init(rng);
      std::vector<ParamRef> params;
      d.collect(params, "d", 0);
      Adam opt(params, {0.01});
      const Tensor x = random_tensor({8, 4}, rng);
      const Tensor w = random_tensor({8, 2}, rng);
      for (int i = 0; i < 10; ++i) {
        Dense::Cache c;
        d.forward(x, &c);
        d.zero_grad();
        d.backward(c, w);
        opt.step();
      }
      return d.weight;
    };
    CHECK(run() == run());
  }
}

TEST_SUITE("weights file") {
  namespace fs = std::filesystem;

  TEST_CASE("OKW1 round trip and shape validation") {
    const auto dir = fs::temp_directory_path() / "okd_unit";
    fs::create_directories(dir);
    std::mt19937_64 rng(13);
    Dense a(4, 3);
    a.init(rng);
    std::vector<ParamRef> pa;
    a.collect(pa, "fc", 0);
    write_weights(dir / "a.okw", pa);

    Dense b(4, 3);
    std::vector<ParamRef> pb;
    b.collect(pb, "fc", 0);
    read_weights(dir / "a.okw", pb);
    CHECK(a.weight == b.weight);
    CHECK(a.bias == b.bias);

    Dense wrong(5, 3);
    std::vector<ParamRef> pw;
    wrong.collect(pw, "fc", 0);
    const Tensor untouched = wrong.weight;
    CHECK_THROWS_AS(read_weights(dir / "a.okw", pw), ShapeError);
    CHECK(wrong.weight == untouched);

    Dense renamed(4, 3);
    std::vector<ParamRef> pr;
    renamed.collect(pr, "other", 0);
    CHECK_THROWS_AS(read_weights(dir / "a.okw", pr), FormatError);
  }
}
