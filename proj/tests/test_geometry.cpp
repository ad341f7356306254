#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <set>

#include "orc/geometry.hpp"

using namespace orc;

namespace {

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Independent fold oracle. Uses the published Miura unit-cell dimensions as a
// function of the placement angle theta in (0, 90):
//   H = b sin(gamma) sin(theta)            crest height
//   L = b sqrt(1 - sin^2(gamma) sin^2(theta))  row pitch
//   S = a sin(gamma) cos(theta) / sqrt(...)    column pitch
//   V = a cos(gamma) / sqrt(...)               herringbone offset
// theta is tied to the fold angle purely numerically: the oracle measures the
// dihedral at a column-strip crease from its own assembled coordinates and
// bisects theta until that dihedral equals 180 deg - fold angle. No algebra is
// shared with fold_miura's closed form.
Eigen::Matrix3Xd oracle_assemble(int rows, int cols, double a, double b,
                                 double gamma_deg, double theta_rad) {
    const double g = gamma_deg * kPi / 180.0;
    const double q = std::sqrt(1.0 - std::sin(g) * std::sin(g) *
                                         std::sin(theta_rad) * std::sin(theta_rad));
    const double H = b * std::sin(g) * std::sin(theta_rad);
    const double L = b * q;
    const double S = a * std::sin(g) * std::cos(theta_rad) / q;
    const double V = a * std::cos(g) / q;

    Eigen::Matrix3Xd pos(3, rows * cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            pos.col(i * cols + j) =
                Eigen::Vector3d(j * S, i * L + (j % 2) * V, (i % 2) * H);
    return pos;
}

// Unsigned dihedral (degrees) across the column-strip crease (0,1)-(1,1),
// measured between the in-plane perpendiculars of the two adjacent facets.
double oracle_dihedral_deg(const Eigen::Matrix3Xd& pos, int cols) {
    const Eigen::Vector3d A = pos.col(0 * cols + 1);
    const Eigen::Vector3d B = pos.col(1 * cols + 1);
    const Eigen::Vector3d wl = pos.col(0 * cols + 0);
    const Eigen::Vector3d wr = pos.col(0 * cols + 2);
    const Eigen::Vector3d eh = (B - A).normalized();
    Eigen::Vector3d pl = wl - A;
    pl -= pl.dot(eh) * eh;
    Eigen::Vector3d pr = wr - A;
    pr -= pr.dot(eh) * eh;
    const double c =
        std::clamp(pl.normalized().dot(pr.normalized()), -1.0, 1.0);
    return std::acos(c) * 180.0 / kPi;
}

Eigen::Matrix3Xd oracle_fold(int rows, int cols, double a, double b,
                             double gamma_deg, double fold_deg) {
    const double target = 180.0 - fold_deg;
    double lo = 1e-12, hi = kPi / 2 - 1e-12;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double d =
            oracle_dihedral_deg(oracle_assemble(rows, cols, a, b, gamma_deg, mid), cols);
        if (d > target)
            lo = mid;  // dihedral decreases as theta grows
        else
            hi = mid;
    }
    return oracle_assemble(rows, cols, a, b, gamma_deg, 0.5 * (lo + hi));
}

int count_creases(const CreasePattern& p, CreaseType t) {
    int n = 0;
    for (const auto& e : p.crease_edges)
        if (e.type == t) ++n;
    return n;
}

}  // namespace

TEST_CASE("pattern combinatorics for the 4x7 sheet") {
    const CreasePattern p = build_miura_pattern(4, 7, 20, 20, 60);
    CHECK(p.node_count() == 28);
    CHECK(p.vertices.size() == 28);
    CHECK(p.facets.size() == 18);
    CHECK(p.crease_edges.size() == 45);  // 4*6 row edges + 7*3 column edges

    const FoldedMesh m = fold_miura(p, 50);
    CHECK(m.node_count() == 28);
    CHECK(m.bars.size() == 63);    // 45 creases + 18 facet diagonals
    CHECK(m.hinges.size() == 45);  // 12 + 15 interior creases + 18 diagonals
    int facet_hinges = 0;
    for (const auto& h : m.hinges) facet_hinges += h.is_facet ? 1 : 0;
    CHECK(facet_hinges == 18);
}

TEST_CASE("pattern combinatorics match enumeration across grid sizes") {
    for (int rows = 2; rows <= 6; ++rows) {
        for (int cols = 2; cols <= 7; ++cols) {
            const CreasePattern p = build_miura_pattern(rows, cols, 15, 25, 55);
            // Independent enumeration: adjacency derived from index pairs.
            std::set<std::pair<int, int>> grid_edges;
            for (int u = 0; u < rows * cols; ++u) {
                const int ri = u / cols, ci = u % cols;
                for (int v = u + 1; v < rows * cols; ++v) {
                    const int rj = v / cols, cj = v % cols;
                    if (std::abs(ri - rj) + std::abs(ci - cj) == 1)
                        grid_edges.insert({u, v});
                }
            }
            std::set<std::pair<int, int>> listed;
            for (const auto& e : p.crease_edges)
                listed.insert({std::min(e.a, e.b), std::max(e.a, e.b)});
            CHECK(listed == grid_edges);
            CHECK(p.facets.size() == size_t((rows - 1) * (cols - 1)));

            const FoldedMesh m = fold_miura(p, 40);
            CHECK(m.bars.size() == grid_edges.size() + p.facets.size());
            const size_t interior =
                size_t((rows - 2) * (cols - 1) + (cols - 2) * (rows - 1));
            CHECK(m.hinges.size() == interior + p.facets.size());
        }
    }
}

TEST_CASE("zero fold angle reproduces the flat pattern") {
    const CreasePattern p = build_miura_pattern(4, 7, 20, 20, 60);
    const FoldedMesh m = fold_miura(p, 0);
    for (int n = 0; n < p.node_count(); ++n) {
        CHECK(m.node_positions(2, n) == 0.0);
        CHECK(std::abs(m.node_positions(0, n) - p.vertices[n].x()) < 1e-12);
        CHECK(std::abs(m.node_positions(1, n) - p.vertices[n].y()) < 1e-12);
    }
}

TEST_CASE("folded coordinates match the independent kinematic oracle") {
    const CreasePattern p = build_miura_pattern(4, 7, 20, 20, 60);
    for (double fold : {60.0, 45.0, 50.0, 30.0, 110.0}) {
        const FoldedMesh m = fold_miura(p, fold);
        const Eigen::Matrix3Xd want = oracle_fold(4, 7, 20, 20, 60, fold);
        const double err = (m.node_positions - want).cwiseAbs().maxCoeff();
        CHECK(err < 1e-9);
    }
    // Anisotropic panels and a different sector angle.
    const CreasePattern q = build_miura_pattern(5, 6, 14, 22, 48);
    const FoldedMesh m = fold_miura(q, 72);
    const Eigen::Matrix3Xd want = oracle_fold(5, 6, 14, 22, 48, 72);
    CHECK((m.node_positions - want).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("facets stay planar parallelograms at every fold angle") {
    const CreasePattern p = build_miura_pattern(4, 7, 20, 20, 60);
    for (double fold : {5.0, 50.0, 90.0, 150.0, 179.0}) {
        const FoldedMesh m = fold_miura(p, fold);
        for (const auto& f : p.facets) {
            const Eigen::Vector3d A = m.node_positions.col(f.nodes[0]);
            const Eigen::Vector3d B = m.node_positions.col(f.nodes[1]);
            const Eigen::Vector3d C = m.node_positions.col(f.nodes[2]);
            const Eigen::Vector3d D = m.node_positions.col(f.nodes[3]);
            CHECK((B - A - (C - D)).norm() < 1e-9);  // parallelogram closure
            const Eigen::Vector3d n = (B - A).cross(D - A).normalized();
            CHECK(std::abs(n.dot(C - A)) < 1e-9);  // planarity
        }
    }
}

TEST_CASE("folding is an isometry: bar rest lengths equal flat lengths") {
    const CreasePattern p = build_miura_pattern(4, 7, 20, 20, 60);
    for (double fold : {10.0, 30.0, 50.0, 60.0, 89.0, 120.0, 179.0}) {
        const FoldedMesh m = fold_miura(p, fold);
        for (const auto& bar : m.bars) {
            const double flat = (p.vertices[bar.a] - p.vertices[bar.b]).norm();
            CHECK(std::abs(bar.rest_length - flat) < 1e-9);
        }
    }
}

TEST_CASE("crest height is strictly monotone in the fold angle") {
    const CreasePattern p = build_miura_pattern(4, 7, 20, 20, 60);
    double last = 0.0;
    for (double fold = 5; fold < 90; fold += 5) {
        const FoldedMesh m = fold_miura(p, fold);
        const double apex = m.node_positions(2, p.node_index(1, 0));
        CHECK(apex > last);
        // Every odd-row node sits at the crest height, even rows at zero.
        for (int i = 0; i < p.rows; ++i)
            for (int j = 0; j < p.cols; ++j) {
                const double z = m.node_positions(2, p.node_index(i, j));
                if (i % 2)
                    CHECK(std::abs(z - apex) < 1e-12);
                else
                    CHECK(std::abs(z) < 1e-12);
            }
        last = apex;
    }
}

TEST_CASE("negative fold angle mirrors the mesh through the flat plane") {
    const CreasePattern p = build_miura_pattern(4, 7, 20, 20, 60);
    const FoldedMesh up = fold_miura(p, 50);
    const FoldedMesh dn = fold_miura(p, -50);
    for (int n = 0; n < p.node_count(); ++n) {
        CHECK(std::abs(up.node_positions(0, n) - dn.node_positions(0, n)) < 1e-12);
        CHECK(std::abs(up.node_positions(1, n) - dn.node_positions(1, n)) < 1e-12);
        CHECK(std::abs(up.node_positions(2, n) + dn.node_positions(2, n)) < 1e-12);
    }
}

TEST_CASE("column-strip crease dihedrals equal 180 deg minus the fold angle") {
    const CreasePattern p = build_miura_pattern(4, 7, 20, 20, 60);
    for (double fold : {20.0, 50.0, 75.0, 130.0}) {
        const FoldedMesh m = fold_miura(p, fold);
        for (const auto& h : m.hinges) {
            if (h.is_facet) continue;
            const int ri = h.i / p.cols, rj = h.j / p.cols;
            if (ri == rj) continue;  // row-direction crease, other family
            const double dev = std::abs(h.rest_angle - kPi) * 180.0 / kPi;
            CHECK(dev == doctest::Approx(fold).epsilon(1e-9));
        }
    }
}

TEST_CASE("facet hinges are born flat") {
    const CreasePattern p = build_miura_pattern(4, 7, 20, 20, 60);
    const FoldedMesh m = fold_miura(p, 50);
    for (const auto& h : m.hinges)
        if (h.is_facet) CHECK(std::abs(h.rest_angle - kPi) < 1e-12);
}

TEST_CASE("mountain/valley labels agree with the folded shape") {
    const CreasePattern p = build_miura_pattern(4, 7, 20, 20, 60);
    const FoldedMesh m = fold_miura(p, 50);
    for (const auto& e : p.crease_edges) {
        const Hinge* hinge = nullptr;
        for (const auto& h : m.hinges) {
            if (h.is_facet) continue;
            if ((h.i == e.a && h.j == e.b) || (h.i == e.b && h.j == e.a)) {
                hinge = &h;
                break;
            }
        }
        if (!hinge) continue;  // boundary edge, label covers the tessellation
        const double edge_z =
            0.5 * (m.node_positions(2, hinge->i) + m.node_positions(2, hinge->j));
        const double wing_z =
            0.5 * (m.node_positions(2, hinge->k) + m.node_positions(2, hinge->l));
        // Mountain creases ridge above their wings when folded upward.
        if (e.type == CreaseType::mountain)
            CHECK(wing_z < edge_z);
        else
            CHECK(wing_z > edge_z);
    }
    // Both labels occur on interior creases.
    CHECK(count_creases(p, CreaseType::mountain) > 0);
    CHECK(count_creases(p, CreaseType::valley) > 0);
}

TEST_CASE("clamp covers the corner of the bottom row") {
    const CreasePattern p = build_miura_pattern(4, 7, 20, 20, 60);
    const FoldedMesh m = fold_miura(p, 50);
    const std::vector<int> want{0, 1, 2};
    CHECK(clamped_nodes(m) == want);

    const CreasePattern tiny = build_miura_pattern(2, 2, 20, 20, 60);
    const FoldedMesh mt = fold_miura(tiny, 50);
    const std::vector<int> want2{0, 1};
    CHECK(clamped_nodes(mt) == want2);

    for (int id : clamped_nodes(m)) CHECK(id < m.cols);  // bottom row only

    // The three clamped nodes are not collinear once folded, so no rigid
    // rotation about a line through them survives.
    const Eigen::Vector3d d1 =
        m.node_positions.col(1) - m.node_positions.col(0);
    const Eigen::Vector3d d2 =
        m.node_positions.col(2) - m.node_positions.col(0);
    CHECK(d1.cross(d2).norm() > 1.0);
}

TEST_CASE("degenerate inputs are rejected") {
    CHECK_THROWS_AS(build_miura_pattern(1, 7, 20, 20, 60), DegenerateGeometry);
    CHECK_THROWS_AS(build_miura_pattern(4, 1, 20, 20, 60), DegenerateGeometry);
    CHECK_THROWS_AS(build_miura_pattern(4, 7, 0, 20, 60), DegenerateGeometry);
    CHECK_THROWS_AS(build_miura_pattern(4, 7, 20, -1, 60), DegenerateGeometry);
    CHECK_THROWS_AS(build_miura_pattern(4, 7, 20, 20, 0), DegenerateGeometry);
    CHECK_THROWS_AS(build_miura_pattern(4, 7, 20, 20, 90), DegenerateGeometry);
    const CreasePattern p = build_miura_pattern(4, 7, 20, 20, 60);
    CHECK_THROWS_AS(fold_miura(p, 180), DegenerateGeometry);
    CHECK_THROWS_AS(fold_miura(p, -200), DegenerateGeometry);
}

TEST_CASE("dihedral gradient matches central finite differences") {
    std::mt19937_64 gen(7);
    auto draw = [&] {
        return (double(gen() >> 11) / 9007199254740992.0) * 2.0 - 1.0;
    };
    int checked = 0;
    while (checked < 25) {
        Eigen::Vector3d pts[4];
        for (auto& q : pts) q = Eigen::Vector3d(draw(), draw(), draw());
        const Eigen::Vector3d e = pts[1] - pts[0];
        if (e.norm() < 0.3) continue;
        const Eigen::Vector3d eh = e.normalized();
        auto offedge = [&](const Eigen::Vector3d& w) {
            Eigen::Vector3d d = w - pts[0];
            d -= d.dot(eh) * eh;
            return d.norm() > 0.3;
        };
        if (!offedge(pts[2]) || !offedge(pts[3])) continue;
        const double mid = signed_dihedral(pts[0], pts[1], pts[2], pts[3]);
        if (mid < 0.5 || mid > 2.0 * kPi - 0.5) continue;  // stay off the cut
        ++checked;

        const auto grad = dihedral_gradient(pts[0], pts[1], pts[2], pts[3]);
        const double h = 1e-6;
        for (int n = 0; n < 4; ++n)
            for (int c = 0; c < 3; ++c) {
                Eigen::Vector3d save = pts[n];
                pts[n](c) = save(c) + h;
                const double up = signed_dihedral(pts[0], pts[1], pts[2], pts[3]);
                pts[n](c) = save(c) - h;
                const double dn = signed_dihedral(pts[0], pts[1], pts[2], pts[3]);
                pts[n](c) = save(c);
                const double fd = (up - dn) / (2.0 * h);
                CHECK(grad[n](c) == doctest::Approx(fd).epsilon(1e-5));
            }
    }
}

TEST_CASE("dihedral gradients of a rigid assembly sum to zero force and torque") {
    const CreasePattern p = build_miura_pattern(4, 7, 20, 20, 60);
    const FoldedMesh m = fold_miura(p, 50);
    for (const auto& h : m.hinges) {
        const auto g = dihedral_gradient(m.node_positions.col(h.i), m.node_positions.col(h.j),
                                         m.node_positions.col(h.k), m.node_positions.col(h.l));
        Eigen::Vector3d f = Eigen::Vector3d::Zero();
        Eigen::Vector3d tq = Eigen::Vector3d::Zero();
        const int ids[4] = {h.i, h.j, h.k, h.l};
        for (int n = 0; n < 4; ++n) {
            f += g[n];
            tq += m.node_positions.col(ids[n]).cross(g[n]);
        }
        CHECK(f.norm() < 1e-10);
        CHECK(tq.norm() < 1e-8);  // mm-scale coordinates
    }
}

TEST_CASE("node naming is row-major") {
    CHECK(node_name(0, 0) == "node_00");
    CHECK(node_name(3, 6) == "node_36");
}
