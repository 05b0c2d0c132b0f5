#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ripple/spectrum.hpp"

using namespace ripple;

TEST(Diagonalize, DiagonalInput) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(4, 4);
    h.diagonal() << 3.0, -1.0, 2.0, 0.5;
    const auto e = diagonalize(h);
    EXPECT_DOUBLE_EQ(e.values(0), -1.0);
    EXPECT_DOUBLE_EQ(e.values(3), 3.0);
    for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(e.vectors.col(j).cwiseAbs().maxCoeff(), 1.0, 1e-15);
}

TEST(Diagonalize, TwoLevel) {
    Eigen::MatrixXd h(2, 2);
    h << 0.0, 1.7, 1.7, 0.0;
    const auto e = diagonalize(h);
    EXPECT_NEAR(e.values(0), -1.7, 1e-14);
    EXPECT_NEAR(e.values(1), 1.7, 1e-14);
}

TEST(Diagonalize, RejectsNonHermitian) {
    Eigen::MatrixXd h(2, 2);
    h << 0.0, 1.0, 0.5, 0.0;
    EXPECT_THROW(diagonalize(h), NumericalError);
}

TEST(Diagonalize, ResidualAndOrthonormality) {
    ModelParams p;
    p.n0 = p.m0 = 100;
    const auto b = build_resonance_block(p, {10, -8, 8});
    const auto e = diagonalize_block(b);
    EXPECT_LE(e.max_residual, 1e-9);
    const Eigen::MatrixXd g = e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(b.dim(), b.dim());
    EXPECT_LE(g.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GroupLevels, SyntheticClusters) {
    Eigen::VectorXd e(9);
    e << 0, 1, 2, 400, 401, 402, 800, 801, 802;
    const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(9, 9);
    const std::vector<int> p{0, 0, 0, 1, 1, 1, 2, 2, 2};
    const auto g = group_levels(e, v, 400.0, p);
    ASSERT_EQ(g.groups.size(), 3u);
    for (int q = 0; q < 3; ++q) {
        ASSERT_EQ(g.groups[static_cast<std::size_t>(q)].levels.size(), 3u);
        EXPECT_EQ(g.groups[static_cast<std::size_t>(q)].q, q);
        for (int s = 0; s < 3; ++s)
            EXPECT_EQ(g.groups[static_cast<std::size_t>(q)].levels[static_cast<std::size_t>(s)].energy, 400.0 * q + s);
    }
    const auto sp = group_spacings(g, 2);
    ASSERT_EQ(sp.size(), 2u);
    EXPECT_DOUBLE_EQ(sp[0], 400.0);
}

TEST(GroupLevels, SingleGroup) {
    Eigen::VectorXd e(3);
    e << 5.0, 1.0, 3.0;
    const auto g = group_levels(e, Eigen::MatrixXd::Identity(3, 3), 400.0, std::vector<int>{0, 0, 0});
    ASSERT_EQ(g.groups.size(), 1u);
    EXPECT_EQ(g.groups[0].q, 0);
    EXPECT_EQ(g.groups[0].levels[0].energy, 1.0);
    EXPECT_EQ(g.groups[0].levels[2].energy, 5.0);
    EXPECT_EQ(g.s_of_column[0], 2);
}

TEST(GroupLevels, AmbiguousStateReported) {
    // eigenvector spread equally over p = 0 and p = 1
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(2, 2);
    v << std::sqrt(0.5), std::sqrt(0.5), std::sqrt(0.5), -std::sqrt(0.5);
    Eigen::VectorXd e(2);
    e << 0.0, 1.0;
    const std::vector<int> p{0, 1};
    const auto g = group_levels(e, v, 400.0, p);
    EXPECT_EQ(g.ambiguous.size(), 2u);
    GroupingOptions strict;
    strict.strict_window = 3;
    EXPECT_THROW(group_levels(e, v, 400.0, p, {}, strict), PhysicsError);
}

namespace {

// pendulum-like group: equidistant bottom, accumulation, then doublets
Group synthetic_pendulum(int& s_acc) {
    std::vector<double> e;
    double x = 0.0;
    for (int i = 0; i < 8; ++i) {
        e.push_back(x);
        x += 10.0;
    }
    // logarithmic accumulation towards the separatrix
    for (double sp : {7.0, 4.5, 3.0, 2.0}) {
        e.push_back(x);
        x += sp;
    }
    s_acc = static_cast<int>(e.size()) - 1;
    e.push_back(x);
    x += 6.0;
    for (int i = 0; i < 6; ++i) {
        e.push_back(x);
        e.push_back(x + 0.1);
        x += 10.0 + 2.0 * i;
    }
    Group g;
    for (std::size_t i = 0; i < e.size(); ++i) g.levels.push_back({static_cast<int>(i), e[i], static_cast<Eigen::Index>(i)});
    return g;
}

}  // namespace

TEST(ClassifyGroup, SyntheticPendulum) {
    int s_acc = 0;
    Group g = synthetic_pendulum(s_acc);
    const auto info = classify_group(g);
    EXPECT_EQ(info.s_sep, s_acc);  // lower level of the smallest spacing (2.0)
    EXPECT_EQ(info.equidistant_levels, 8);
    EXPECT_NEAR(info.bottom_spread, 0.0, 1e-12);
    EXPECT_GE(info.paired_fraction, 0.8);
    EXPECT_GE(info.M_s, 1);
    // spacings 4.5, 3 and 2 lie below half the bottom spacing (5): levels s_acc-2 .. s_acc+1
    EXPECT_EQ(info.band_begin, s_acc - 2);
    EXPECT_EQ(info.band_end, s_acc + 1);
    EXPECT_EQ(info.M_s, 4);
    for (const auto& l : g.levels) {
        if (l.s < info.band_begin) EXPECT_EQ(l.cls, LevelClass::inside);
        else if (l.s <= info.band_end) EXPECT_EQ(l.cls, LevelClass::near_separatrix);
        else EXPECT_EQ(l.cls, LevelClass::above_separatrix);
    }
}

TEST(ClassifyGroup, NoInteriorMinimum) {
    Group g;
    for (int i = 0; i < 12; ++i) g.levels.push_back({i, 10.0 * i - 0.2 * i * i, i});  // spacing keeps shrinking
    EXPECT_THROW(classify_group(g), PhysicsError);
    Group small;
    for (int i = 0; i < 5; ++i) small.levels.push_back({i, 1.0 * i, i});
    EXPECT_THROW(classify_group(small), PhysicsError);
}

TEST(Projection, EigenvectorAndNorm) {
    ModelParams p;
    p.n0 = p.m0 = 100;
    const auto b = build_resonance_block(p, {6, -6, 6});
    const auto e = diagonalize_block(b);
    const auto g = group_levels(e, b);
    const Eigen::Index col = g.column(0, 5);
    const Eigen::VectorXcd psi = e.vectors.col(col).cast<std::complex<double>>();
    const auto c = project_onto_groups(psi, g);
    EXPECT_NEAR(std::abs(c(col)), 1.0, 1e-12);
    EXPECT_NEAR(c.squaredNorm(), 1.0, 1e-12);
    EXPECT_LE((c.cwiseAbs().array() > 1e-10).count(), 1);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    Eigen::VectorXcd r(b.dim());
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = {nd(rng), nd(rng)};
    r.normalize();
    const auto cr = project_onto_groups(r, g);
    EXPECT_NEAR(cr.squaredNorm(), 1.0, 1e-10);
    EXPECT_LE((reconstruct_state(cr, g) - r).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_THROW(project_onto_groups(Eigen::VectorXcd::Zero(3), g), DomainError);
}

TEST(SpectrumStructure, PaperResonanceReducedWindow) {
    // paper resonance, p window cut to +-8: the q = 0 pendulum needs |r| up to ~50
    ModelParams p;
    const auto b = build_resonance_block(p, {50, -8, 8});
    const auto e = diagonalize_block(b);
    auto g = group_levels(e, b);
    const auto sp = group_spacings(g, 2);
    ASSERT_EQ(sp.size(), 4u);
    for (double s : sp) EXPECT_NEAR(s / p.omega_n0(), 1.0, 0.01);
    Group* q0 = g.find(0);
    ASSERT_NE(q0, nullptr);
    const auto info = classify_group(*q0);
    EXPECT_GT(info.s_sep, 20);
    EXPECT_LT(info.bottom_spread, 0.05);
    EXPECT_GE(info.paired_fraction, 0.8);
}

TEST(SpectrumStructure, SmallResonanceHasFewInsideLevels) {
    // n0 = 100: only ~9 levels below the accumulation point, the bottom is visibly anharmonic
    ModelParams p;
    p.n0 = p.m0 = 100;
    const auto b = build_resonance_block(p, {14, -8, 8});
    const auto e = diagonalize_block(b);
    auto g = group_levels(e, b);
    const auto info = classify_group(*g.find(0));
    EXPECT_GT(info.s_sep, 3);
    EXPECT_LT(info.s_sep, 15);
    EXPECT_GT(info.bottom_spread, 0.05);
}
