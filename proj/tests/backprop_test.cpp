#include <doctest.h>

#include "lbpwht/errors.hpp"
#include "lbpwht/linear_backprop.hpp"
#include "lbpwht/matrix_ops.hpp"
#include "lbpwht/rng.hpp"
#include "oracles.hpp"

using namespace lbpwht;

namespace {

LbpWhtMode make_lbp_mode(const BaseIndexSet& bases, Index tokens) {
  return LbpWhtMode{bases, WhtPlan::for_signal(tokens)};
}

BaseIndexSet full_rank_set(int n) { return lp_linf_select(n, n); }

}  // namespace

TEST_SUITE("backprop") {
  TEST_CASE("identity weight forwards the input unchanged") {
    LinearLayerState layer(Matrix::Identity(4, 4), ExactMode{});
    Rng rng(1);
    const Matrix x = random_normal_matrix(6, 4, rng);
    CHECK(linear_forward(layer, x) == x);
  }

  TEST_CASE("zero adapter up-projection leaves the forward path unchanged") {
    Rng rng(2);
    Matrix w = random_normal_matrix(3, 5, rng);
    const Matrix x = random_normal_matrix(7, 5, rng);
    LinearLayerState plain(w, ExactMode{});
    const Matrix base = linear_forward(plain, x);

    LoraMode lora;
    lora.rank = 2;
    lora.w_a = Matrix::Zero(5, 2);
    lora.w_b = random_normal_matrix(2, 3, rng);
    LinearLayerState adapted(w, std::move(lora));
    CHECK((linear_forward(adapted, x) - base).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("forward matches the triple-loop oracle") {
    Rng rng(3);
    const Matrix w = random_normal_matrix(2, 3, rng);
    const Matrix x = random_normal_matrix(4, 3, rng);
    LinearLayerState layer(w, ExactMode{});
    const Matrix y = linear_forward(layer, x);
    const Matrix want = oracle::matmul(x, w.transpose());
    CHECK((y - want).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("zero output gradient gives zero gradients") {
    Rng rng(4);
    LinearLayerState layer(random_normal_matrix(3, 5, rng), ExactMode{});
    linear_forward(layer, random_normal_matrix(6, 5, rng));
    const Gradients g = exact_backward(layer, Matrix::Zero(6, 3));
    CHECK(g.g_x.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.g_w.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("single-token weight gradient is the outer product") {
    Rng rng(5);
    LinearLayerState layer(random_normal_matrix(3, 4, rng), ExactMode{});
    const Matrix x = random_normal_matrix(1, 4, rng);
    linear_forward(layer, x);
    const Matrix g_y = random_normal_matrix(1, 3, rng);
    const Gradients g = exact_backward(layer, g_y);
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 4; ++j)
        CHECK(g.g_w(i, j) == doctest::Approx(g_y(0, i) * x(0, j)).epsilon(1e-12));
  }

  TEST_CASE("backward before forward is an error") {
    LinearLayerState layer(Matrix::Identity(2, 2), ExactMode{});
    CHECK_THROWS_AS(exact_backward(layer, Matrix::Zero(1, 2)), Error);
  }

  TEST_CASE("exact backward agrees with central differences on 0.5*||y||^2") {
    Rng rng(6);
    for (int trial = 0; trial < 5; ++trial) {
      Rng r = rng.child(trial);
      const Index l = 2 + static_cast<Index>(r.below(15));
      const Index cx = 1 + static_cast<Index>(r.below(8));
      const Index cy = 1 + static_cast<Index>(r.below(8));
      Matrix w = random_normal_matrix(cy, cx, r);
      Matrix x = random_normal_matrix(l, cx, r);

      LinearLayerState layer(w, ExactMode{});
      linear_forward(layer, x);
      const Matrix y = matmul(x, w.transpose());
      const Gradients g = exact_backward(layer, y);  // d(0.5||y||^2)/dy = y

      const auto loss_w = [&] { return 0.5 * matmul(x, w.transpose()).squaredNorm(); };
      const Matrix fd_w = oracle::finite_difference(w, loss_w, 1e-4);
      CHECK(relative_frobenius_error(g.g_w, fd_w) < 1e-5);

      const auto loss_x = [&] { return 0.5 * matmul(x, w.transpose()).squaredNorm(); };
      const Matrix fd_x = oracle::finite_difference(x, loss_x, 1e-4);
      CHECK(relative_frobenius_error(g.g_x, fd_x) < 1e-5);
    }
  }

  TEST_CASE("full-rank low-rank backward equals exact backward") {
    Rng rng(7);
    for (Index l : {4, 16, 64}) {
      const WhtPlan plan = WhtPlan::for_signal(l);
      const BaseIndexSet full = full_rank_set(plan.n);
      for (int trial = 0; trial < 10; ++trial) {
        Rng r = rng.child(static_cast<std::uint64_t>(l * 100 + trial));
        Matrix w = random_normal_matrix(5, 6, r);
        LinearLayerState layer(w, LbpWhtMode{full, plan});
        linear_forward(layer, random_normal_matrix(l, 6, r));
        const Matrix g_y = random_normal_matrix(l, 5, r);
        const Gradients approx = lbp_wht_backward(layer, g_y);
        const Gradients exact = exact_backward(layer, g_y);
        CHECK(relative_frobenius_error(approx.g_x, exact.g_x) < 1e-9);
        CHECK(relative_frobenius_error(approx.g_w, exact.g_w) < 1e-9);
      }
    }
  }

  TEST_CASE("gradients inside the projection span are reproduced exactly") {
    // Constant rows live in the DC span when nothing is padded away.
    const Index l = 16;
    const WhtPlan plan = WhtPlan::for_signal(l);
    BaseIndexSet dc = lp_l1_select(1, plan.n);
    Rng rng(8);
    Matrix w = random_normal_matrix(3, 4, rng);
    LinearLayerState layer(w, LbpWhtMode{dc, plan});
    linear_forward(layer, random_normal_matrix(l, 4, rng));
    Matrix g_y(l, 3);
    for (Index t = 0; t < l; ++t) g_y.row(t) << 0.3, -1.2, 0.7;
    const Gradients approx = lbp_wht_backward(layer, g_y);
    const Gradients exact = exact_backward(layer, g_y);
    CHECK(relative_frobenius_error(approx.g_x, exact.g_x) < 1e-9);
  }

  TEST_CASE("padded low-rank backward matches the explicit-projector oracle") {
    const Index l = 49;
    const WhtPlan plan = WhtPlan::for_signal(l);
    const BaseIndexSet sel = lp_l1_select(4, plan.n);
    REQUIRE(sel.rank() == 10);
    Rng rng(9);
    Matrix w = random_normal_matrix(5, 7, rng);
    const Matrix x = random_normal_matrix(l, 7, rng);
    LinearLayerState layer(w, LbpWhtMode{sel, plan});
    linear_forward(layer, x);
    const Matrix g_y = random_normal_matrix(l, 5, rng);
    const Gradients got = lbp_wht_backward(layer, g_y);
    const oracle::LowRankGradients want = oracle::lbp_backward(x, w, g_y, sel.indices, plan.n);
    CHECK((got.g_x - want.g_x).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((got.g_w - want.g_w).cwiseAbs().maxCoeff() <= 1e-10);
  }

  TEST_CASE("adapter backward: zero gradient and zero up-projection cases") {
    Rng rng(10);
    LoraMode lora;
    lora.rank = 3;
    lora.w_a = random_normal_matrix(4, 3, rng);
    lora.w_b = Matrix::Zero(3, 2);
    LinearLayerState layer(random_normal_matrix(2, 4, rng), std::move(lora));
    linear_forward(layer, random_normal_matrix(5, 4, rng));

    const Gradients zero = lora_backward(layer, Matrix::Zero(5, 2));
    CHECK(zero.g_x.cwiseAbs().maxCoeff() == 0.0);
    CHECK(zero.g_wa->cwiseAbs().maxCoeff() == 0.0);
    CHECK(zero.g_wb->cwiseAbs().maxCoeff() == 0.0);

    // w_b = 0 kills the w_a gradient but generally not the w_b gradient.
    const Gradients g = lora_backward(layer, random_normal_matrix(5, 2, rng));
    CHECK(g.g_wa->cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.g_wb->cwiseAbs().maxCoeff() > 0.0);
  }

  TEST_CASE("adapter backward agrees with central differences") {
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
      Rng r = rng.child(trial);
      const Index l = 3, cx = 4, cy = 3, rank = 2;
      Matrix w = random_normal_matrix(cy, cx, r);
      LoraMode lora;
      lora.rank = rank;
      lora.w_a = random_normal_matrix(cx, rank, r);
      lora.w_b = random_normal_matrix(rank, cy, r);
      Matrix x = random_normal_matrix(l, cx, r);

      LinearLayerState layer(w, lora);
      linear_forward(layer, x);
      auto& mode = std::get<LoraMode>(layer.mode());

      const auto loss = [&] {
        const Matrix y =
            matmul(x, layer.weight().transpose()) + matmul(matmul(x, mode.w_a), mode.w_b);
        return 0.5 * y.squaredNorm();
      };
      const Matrix y = matmul(x, w.transpose()) + matmul(matmul(x, lora.w_a), lora.w_b);
      const Gradients g = lora_backward(layer, y);

      CHECK(relative_frobenius_error(*g.g_wa, oracle::finite_difference(mode.w_a, loss, 1e-4)) <
            1e-5);
      CHECK(relative_frobenius_error(*g.g_wb, oracle::finite_difference(mode.w_b, loss, 1e-4)) <
            1e-5);
      CHECK(relative_frobenius_error(g.g_x, oracle::finite_difference(x, loss, 1e-4)) < 1e-5);
    }
  }

  TEST_CASE("adapter and exact backward agree on g_x when the adapter product is zero") {
    Rng rng(12);
    Matrix w = random_normal_matrix(3, 4, rng);
    const Matrix x = random_normal_matrix(6, 4, rng);
    const Matrix g_y = random_normal_matrix(6, 3, rng);

    LinearLayerState exact_layer(w, ExactMode{});
    linear_forward(exact_layer, x);
    const Gradients exact = exact_backward(exact_layer, g_y);

    LoraMode lora;
    lora.rank = 2;
    lora.w_a = Matrix::Zero(4, 2);
    lora.w_b = random_normal_matrix(2, 3, rng);
    LinearLayerState lora_layer(w, std::move(lora));
    linear_forward(lora_layer, x);
    const Gradients adapted = lora_backward(lora_layer, g_y);
    CHECK(relative_frobenius_error(adapted.g_x, exact.g_x) < 1e-12);
  }

  TEST_CASE("gradient error: zero for identical, one against zero") {
    Gradients a;
    Rng rng(13);
    a.g_x = random_normal_matrix(3, 4, rng);
    a.g_w = random_normal_matrix(2, 4, rng);
    Gradients same = a;
    const GradientError none = gradient_error(a, same);
    CHECK(none.err_gx == 0.0);
    CHECK(none.err_gw == 0.0);
    Gradients zero;
    zero.g_x = Matrix::Zero(3, 4);
    zero.g_w = Matrix::Zero(2, 4);
    const GradientError full = gradient_error(a, zero);
    CHECK(full.err_gx == doctest::Approx(1.0));
    CHECK(full.err_gw == doctest::Approx(1.0));
  }

  TEST_CASE("errors shrink along the nested low-pass sweep") {
    // One smooth-spectrum instance; the nested subspaces then capture
    // strictly more of it at every step.
    const Index l = 49;
    const WhtPlan plan = WhtPlan::for_signal(l);
    Rng rng(14);
    Matrix coeffs_g(64, 5);
    Matrix coeffs_x(64, 7);
    std::vector<BaseIndex> all;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) all.push_back({i, j});
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) {
        const double scale = std::exp(-0.6 * (i + j));
        for (Index c = 0; c < 5; ++c) coeffs_g(i * 8 + j, c) = scale * rng.normal();
        for (Index c = 0; c < 7; ++c) coeffs_x(i * 8 + j, c) = scale * rng.normal();
      }
    }
    const Matrix g_y = reverse_project(coeffs_g, all, plan);
    const Matrix x = reverse_project(coeffs_x, all, plan);
    Matrix w = random_normal_matrix(5, 7, rng);
    LinearLayerState layer(w, ExactMode{});
    linear_forward(layer, x);
    const Gradients exact = exact_backward(layer, g_y);

    double last_gx = 2.0, last_gw = 2.0;
    for (int p = 1; p <= 8; ++p) {
      layer.mode() = make_lbp_mode(lp_l1_select(p, plan.n), l);
      const Gradients approx = lbp_wht_backward(layer, g_y);
      const GradientError err = gradient_error(exact, approx);
      CHECK(err.err_gx <= last_gx + 1e-9);
      CHECK(err.err_gw <= last_gw + 1e-9);
      last_gx = err.err_gx;
      last_gw = err.err_gw;
    }
    CHECK(last_gx < 0.1);  // high ranks capture nearly everything
  }

  TEST_CASE("shape mismatches are rejected") {
    Rng rng(15);
    LinearLayerState layer(random_normal_matrix(3, 4, rng), ExactMode{});
    CHECK_THROWS_AS(linear_forward(layer, random_normal_matrix(5, 3, rng)), ShapeError);
    linear_forward(layer, random_normal_matrix(5, 4, rng));
    CHECK_THROWS_AS(exact_backward(layer, random_normal_matrix(5, 4, rng)), ShapeError);
    CHECK_THROWS_AS(exact_backward(layer, random_normal_matrix(4, 3, rng)), ShapeError);
  }
}
