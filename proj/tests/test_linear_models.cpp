#include "doctest.h"
#include "support.hpp"

#include "freqcast/linear_models.hpp"

using namespace freqcast;
using namespace freqcast::linear;
using testing::random_matrix;

namespace {

fits::FitsConfig hybrid_config() {
    fits::FitsConfig c;
    c.seq_len = 36;
    c.pred_len = 12;
    c.base_period = 12;
    c.harmonic_order = 4;
    return c;
}

Matrix last_row_selector(Index seq, Index out) {
    Matrix w = Matrix::Zero(seq, out);
    w.row(seq - 1).setOnes();
    return w;
}

}  // namespace

TEST_CASE("decompose") {
    const Matrix c = Matrix::Constant(30, 2, 4.5);
    auto [t, s] = decompose(c, 25);
    CHECK((t - c).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(s.cwiseAbs().maxCoeff() < 1e-14);

    Matrix ramp(60, 1);
    for (Index i = 0; i < 60; ++i) ramp(i, 0) = 0.3 * double(i) - 2.0;
    auto [rt, rs] = decompose(ramp, 25);
    const Index pad = 12;
    CHECK(rs.middleRows(pad, 60 - 2 * pad).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(rs.topRows(pad).cwiseAbs().maxCoeff() > 0.1);

    const Matrix x = random_matrix(40, 3, 2);
    auto [xt, xs] = decompose(x, 25);
    CHECK(((xt + xs) - x).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS(decompose(x, 24));
}

TEST_CASE("DLinear forward") {
    DLinear m(30, 10);
    CHECK(m.output_len() == 10);
    CHECK(m.param_count() == 2 * 30 * 10);
    const Matrix x = random_matrix(30, 4, 5);

    m.set_weights(Matrix::Zero(30, 10), Matrix::Zero(30, 10));
    CHECK(m.forward(x, 0, nullptr).cwiseAbs().maxCoeff() == 0.0);

    const Matrix sel = last_row_selector(30, 10);
    m.set_weights(sel, sel);
    const Matrix y = m.forward(x, 0, nullptr);
    for (Index j = 0; j < 4; ++j) CHECK((y.col(j).array() - x(29, j)).abs().maxCoeff() < 1e-12);

    testing::randomize(m, 3);
    const Matrix y1 = m.forward(x, 0, nullptr);
    CHECK((m.forward(2 * x, 0, nullptr) - 2 * y1).cwiseAbs().maxCoeff() < 1e-12);
    const Matrix x2 = random_matrix(30, 4, 6);
    const Matrix lhs = m.forward(1.5 * x - 0.5 * x2, 0, nullptr);
    CHECK((lhs - (1.5 * y1 - 0.5 * m.forward(x2, 0, nullptr))).cwiseAbs().maxCoeff() < 1e-7);

    // trend / seasonal maps match an explicit decomposition
    const Matrix wt = m.trend_weights(), ws = m.seasonal_weights();
    auto [t, s] = decompose(x, 25);
    CHECK((y1 - (wt.transpose() * t + ws.transpose() * s)).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS(m.forward(Matrix::Zero(29, 1), 0, nullptr));
}

TEST_CASE("NLinear forward") {
    NLinear m(20, 5);
    const Matrix x = random_matrix(20, 3, 1);
    m.set_weights(Matrix::Zero(20, 5));
    const Matrix y = m.forward(x, 0, nullptr);
    for (Index j = 0; j < 3; ++j) CHECK((y.col(j).array() - x(19, j)).abs().maxCoeff() == 0.0);

    testing::randomize(m, 2);
    const Matrix c = Matrix::Constant(20, 1, 3.25);
    CHECK((m.forward(c, 0, nullptr).array() - 3.25).abs().maxCoeff() < 1e-14);

    const Matrix fx = m.forward(x, 0, nullptr);
    const Matrix fs = m.forward(x.array() + 7.0, 0, nullptr);
    CHECK(((fs.array() - 7.0) - fx.array()).abs().maxCoeff() < 1e-12);

    const Matrix x2 = random_matrix(20, 3, 9);
    CHECK((m.forward(0.7 * x + 2.0 * x2, 0, nullptr) - (0.7 * fx + 2.0 * m.forward(x2, 0, nullptr)))
              .cwiseAbs()
              .maxCoeff() < 1e-7);
}

TEST_CASE("Linear is linear") {
    LinearModel m(16, 4, 3);
    const Matrix a = random_matrix(16, 2, 1), b = random_matrix(16, 2, 2);
    const Matrix lhs = m.forward(3 * a - b, 0, nullptr);
    CHECK((lhs - (3 * m.forward(a, 0, nullptr) - m.forward(b, 0, nullptr))).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(m.param_count() == 64);
}

TEST_CASE("DLinear+FITS") {
    DLinearPlusFits m(hybrid_config());
    CHECK(m.output_len() == 48);
    const Matrix x = random_matrix(36, 2, 4, 2.0).array() + 1.0;
    const Matrix y = m.forward(x, 0, nullptr);
    CHECK(y.rows() == 48);
    CHECK(y.bottomRows(m.pred_len()).rows() == 12);

    SUBCASE("zero FITS weights leave DLinear plus the residual mean") {
        for (auto& p : m.fits().params()) p.value.setZero();
        testing::randomize(m.dlinear(), 5, 0.1);
        const Matrix dl = m.dlinear().forward(x, 0, nullptr);
        const Matrix residual = x - dl.topRows(36);
        const Matrix out = m.forward(x, 0, nullptr);
        for (Index j = 0; j < 2; ++j)
            CHECK(((out.col(j) - dl.col(j)).array() - residual.col(j).mean()).abs().maxCoeff() < 1e-12);
    }
    SUBCASE("a window DLinear explains exactly leaves nothing for FITS") {
        testing::randomize(m.fits(), 6, 0.3);
        Matrix w = Matrix::Zero(36, 48);
        w.leftCols(36).setIdentity();
        w.rightCols(12) = random_matrix(36, 12, 7, 0.1);
        m.dlinear().set_weights(w, w);
        const Matrix dl = m.dlinear().forward(x, 0, nullptr);
        CHECK((dl.topRows(36) - x).cwiseAbs().maxCoeff() < 1e-12);
        // The residual window is flat, so FITS output is its mean plus bias
        // terms scaled by the std floor.
        CHECK((m.forward(x, 0, nullptr) - dl).cwiseAbs().maxCoeff() < 1e-4);
    }
    SUBCASE("zero DLinear leaves FITS alone") {
        for (auto& p : m.dlinear().params()) p.value.setZero();
        CHECK((m.forward(x, 0, nullptr) - m.fits().forward(x, 0, nullptr)).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(m.param_count() == m.dlinear().param_count() + m.fits().param_count());
}

TEST_CASE("FITS+DLinear") {
    FitsPlusDLinear m(hybrid_config());
    CHECK(m.output_len() == 12);
    const Matrix x = random_matrix(36, 3, 8, 1.5).array() - 4.0;
    CHECK(m.forward(x, 0, nullptr).rows() == 12);

    SUBCASE("zero FITS weights feed DLinear the window mean") {
        for (auto& p : m.fits().params()) p.value.setZero();
        testing::randomize(m.dlinear(), 9, 0.2);
        const Matrix y = m.forward(x, 0, nullptr);
        const Vector colsum = m.dlinear().trend_weights().colwise().sum().transpose();
        for (Index j = 0; j < 3; ++j) CHECK((y.col(j) - x.col(j).mean() * colsum).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("composition order") {
        testing::randomize(m, 10, 0.2);
        const Matrix f = m.fits().forward(x, 0, nullptr);
        const Matrix ref = m.dlinear().forward(f.topRows(36), 0, nullptr);
        CHECK((m.forward(x, 0, nullptr) - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("gradients match finite differences for linear models and hybrids") {
    std::vector<std::unique_ptr<Forecaster>> models;
    models.push_back(std::make_unique<DLinear>(36, 12));
    models.push_back(std::make_unique<DLinear>(36, 12, 25, true));
    models.push_back(std::make_unique<NLinear>(36, 12, 1));
    models.push_back(std::make_unique<LinearModel>(36, 12, 2));
    models.push_back(std::make_unique<DLinearPlusFits>(hybrid_config()));
    models.push_back(std::make_unique<FitsPlusDLinear>(hybrid_config()));
    auto indiv = hybrid_config();
    indiv.channel_mode = fits::ChannelMode::individual;
    indiv.channels = 2;
    models.push_back(std::make_unique<DLinearPlusFits>(indiv));
    models.push_back(std::make_unique<FitsPlusDLinear>(indiv));
    auto deep = hybrid_config();
    deep.variant = fits::Variant::deep_modrelu;
    deep.depth = 1;
    models.push_back(std::make_unique<DLinearPlusFits>(deep));

    int k = 0;
    for (auto& m : models) {
        CAPTURE(m->kind());
        CAPTURE(k);
        testing::randomize(*m, 40 + k, 0.2);
        const Index cols = m->group_count() > 1 ? 1 : 2;
        const Matrix x = random_matrix(36, cols, 60 + k, 2.0).array() + 0.5;
        for (std::size_t g = 0; g < m->group_count(); ++g) {
            const auto r = testing::grad_check(*m, x, g, 5 + g);
            CHECK(r.checked > 0);
            CHECK(r.max_param_err < 1e-4);
            CHECK(r.max_input_err < 1e-4);
        }
        ++k;
    }
}

TEST_CASE("zero residual gives zero gradients") {
    DLinear m(20, 6);
    testing::randomize(m, 1);
    const Matrix x = random_matrix(20, 2, 2);
    ForwardCache cache;
    m.zero_grad();
    m.forward(x, 0, &cache);
    const Matrix gx = m.backward(cache, Matrix::Zero(6, 2), 0);
    CHECK(gx.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& p : m.params()) CHECK(p.grad.cwiseAbs().maxCoeff() == 0.0);
}
