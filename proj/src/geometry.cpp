#include "orc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace orc {

namespace {

constexpr double kPi = 3.14159265358979323846;

double deg2rad(double d) { return d * kPi / 180.0; }

// Diagonal node ids of facet (fi, fj): the shorter diagonal of the
// parallelogram, which flips orientation with column parity.
std::pair<int, int> facet_diagonal(const CreasePattern& p, int fi, int fj) {
    const int a = p.node_index(fi, fj);
    const int b = p.node_index(fi, fj + 1);
    const int c = p.node_index(fi + 1, fj + 1);
    const int d = p.node_index(fi + 1, fj);
    if (fj % 2 == 0) return {b, d};
    return {a, c};
}

// Third node of the split triangle of facet (fi, fj) adjacent to edge (u, v).
int wing_node(const CreasePattern& p, int fi, int fj, int u, int v) {
    const auto [d0, d1] = facet_diagonal(p, fi, fj);
    const int corners[4] = {p.node_index(fi, fj), p.node_index(fi, fj + 1),
                            p.node_index(fi + 1, fj + 1), p.node_index(fi + 1, fj)};
    for (int other : corners) {
        if (other == d0 || other == d1) continue;
        // Triangle {d0, d1, other}: does it contain both u and v?
        const bool has_u = (u == d0 || u == d1 || u == other);
        const bool has_v = (v == d0 || v == d1 || v == other);
        if (has_u && has_v) {
            if (u != other && v != other) return other;
            return (u == d0 || v == d0) ? d1 : d0;
        }
    }
    throw DegenerateGeometry("edge does not belong to facet");
}

}  // namespace

CreasePattern build_miura_pattern(int rows, int cols, double panel_a,
                                  double panel_b, double gamma_deg) {
    if (rows < 2 || cols < 2)
        throw DegenerateGeometry("grid must be at least 2x2, got " +
                                 std::to_string(rows) + "x" + std::to_string(cols));
    if (!(panel_a > 0.0) || !(panel_b > 0.0))
        throw DegenerateGeometry("panel side lengths must be positive");
    if (!(gamma_deg > 0.0) || !(gamma_deg < 90.0))
        throw DegenerateGeometry("sector angle must lie in (0, 90) degrees");

    CreasePattern p;
    p.rows = rows;
    p.cols = cols;
    p.panel_a = panel_a;
    p.panel_b = panel_b;
    p.gamma_deg = gamma_deg;

    const double g = deg2rad(gamma_deg);
    const double pitch = panel_a * std::sin(g);
    const double offset = panel_a * std::cos(g);  // zigzag of odd columns

    p.vertices.reserve(static_cast<size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            p.vertices.emplace_back(j * pitch, i * panel_b + (j % 2) * offset);

    // Labels describe a positive fold angle, which lifts the odd rows:
    // row creases are mountains along crest rows, column creases alternate
    // along the line and swap parity column to column.
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j + 1 < cols; ++j)
            p.crease_edges.push_back(
                {p.node_index(i, j), p.node_index(i, j + 1),
                 (i % 2) ? CreaseType::mountain : CreaseType::valley});
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i + 1 < rows; ++i)
            p.crease_edges.push_back(
                {p.node_index(i, j), p.node_index(i + 1, j),
                 ((i + j) % 2 == 0) ? CreaseType::mountain : CreaseType::valley});

    for (int i = 0; i + 1 < rows; ++i)
        for (int j = 0; j + 1 < cols; ++j)
            p.facets.push_back({{p.node_index(i, j), p.node_index(i, j + 1),
                                 p.node_index(i + 1, j + 1), p.node_index(i + 1, j)}});
    return p;
}

FoldedMesh fold_miura(const CreasePattern& p, double fold_angle_deg) {
    if (!(std::abs(fold_angle_deg) < 180.0))
        throw DegenerateGeometry("fold angle must satisfy |angle| < 180 degrees");

    const double a = p.panel_a, b = p.panel_b;
    const double g = deg2rad(p.gamma_deg);
    const double cg = std::cos(g), sg = std::sin(g);
    const double psi = deg2rad(std::abs(fold_angle_deg));
    const double zsign = fold_angle_deg < 0.0 ? -1.0 : 1.0;
    const double cpsi = std::cos(psi);

    // Closed-form fold: the dihedral at the column-strip creases equals
    // 180 deg - fold angle, which fixes the crest height H.
    const double t = b * b * sg * sg * (1.0 - cpsi) / (1.0 + cg * cg - cpsi * sg * sg);
    const double H = std::sqrt(std::max(0.0, t));
    const double row_pitch = std::sqrt(std::max(0.0, b * b - t));
    const double herring = a * b * cg / row_pitch;  // odd-column y offset
    const double l2 = a * a - herring * herring;
    if (!(l2 > 1e-12 * a * a))
        throw DegenerateGeometry("fold angle collapses the column pitch");
    const double col_pitch = std::sqrt(l2);

    FoldedMesh m;
    m.rows = p.rows;
    m.cols = p.cols;
    m.panel_a = a;
    m.panel_b = b;
    m.gamma_deg = p.gamma_deg;
    m.fold_angle_deg = fold_angle_deg;
    m.node_positions.resize(3, p.node_count());
    for (int i = 0; i < p.rows; ++i)
        for (int j = 0; j < p.cols; ++j)
            m.node_positions.col(p.node_index(i, j)) =
                Eigen::Vector3d(j * col_pitch, i * row_pitch + (j % 2) * herring,
                                zsign * (i % 2) * H);

    auto folded_length = [&](int u, int v) {
        return (m.node_positions.col(u) - m.node_positions.col(v)).norm();
    };

    for (const CreaseEdge& e : p.crease_edges)
        m.bars.push_back({e.a, e.b, folded_length(e.a, e.b)});
    for (int fi = 0; fi + 1 < p.rows; ++fi)
        for (int fj = 0; fj + 1 < p.cols; ++fj) {
            const auto [d0, d1] = facet_diagonal(p, fi, fj);
            m.bars.push_back({d0, d1, folded_length(d0, d1)});
        }

    auto add_hinge = [&](int i, int j, int k, int l, bool is_facet) {
        const double rest = signed_dihedral(m.node_positions.col(i), m.node_positions.col(j),
                                            m.node_positions.col(k), m.node_positions.col(l));
        m.hinges.push_back({i, j, k, l, rest, is_facet});
    };

    // Crease hinges exist on interior edges only. Row-direction edges couple
    // the facet strips below and above; column-direction edges the strips
    // left and right.
    for (int i = 1; i + 1 < p.rows; ++i)
        for (int j = 0; j + 1 < p.cols; ++j) {
            const int u = p.node_index(i, j), v = p.node_index(i, j + 1);
            add_hinge(u, v, wing_node(p, i - 1, j, u, v), wing_node(p, i, j, u, v), false);
        }
    for (int j = 1; j + 1 < p.cols; ++j)
        for (int i = 0; i + 1 < p.rows; ++i) {
            const int u = p.node_index(i, j), v = p.node_index(i + 1, j);
            add_hinge(u, v, wing_node(p, i, j - 1, u, v), wing_node(p, i, j, u, v), false);
        }
    for (int fi = 0; fi + 1 < p.rows; ++fi)
        for (int fj = 0; fj + 1 < p.cols; ++fj) {
            const auto [d0, d1] = facet_diagonal(p, fi, fj);
            const int corners[4] = {p.node_index(fi, fj), p.node_index(fi, fj + 1),
                                    p.node_index(fi + 1, fj + 1), p.node_index(fi + 1, fj)};
            int wings[2], w = 0;
            for (int c : corners)
                if (c != d0 && c != d1) wings[w++] = c;
            add_hinge(d0, d1, wings[0], wings[1], true);
        }
    return m;
}

std::vector<int> clamped_nodes(const FoldedMesh& mesh) {
    std::vector<int> ids;
    const int n = std::min(3, mesh.cols);
    for (int j = 0; j < n; ++j) ids.push_back(mesh.node_index(0, j));
    return ids;
}

double signed_dihedral(const Eigen::Vector3d& pi_, const Eigen::Vector3d& pj,
                       const Eigen::Vector3d& pk, const Eigen::Vector3d& pl) {
    const Eigen::Vector3d e = pj - pi_;
    const double len = e.norm();
    if (!(len > 0.0)) throw DegenerateGeometry("hinge edge has zero length");
    const Eigen::Vector3d eh = e / len;

    Eigen::Vector3d wk = pk - pi_;
    wk -= wk.dot(eh) * eh;
    Eigen::Vector3d wl = pl - pi_;
    wl -= wl.dot(eh) * eh;
    const double hk = wk.norm(), hl = wl.norm();
    if (!(hk > 0.0) || !(hl > 0.0))
        throw DegenerateGeometry("hinge wing collapsed onto its edge");
    wk /= hk;
    wl /= hl;

    double th = std::atan2(eh.dot(wk.cross(wl)), wk.dot(wl));
    if (th < 0.0) th += 2.0 * kPi;
    return th;
}

std::array<Eigen::Vector3d, 4> dihedral_gradient(const Eigen::Vector3d& pi_,
                                                 const Eigen::Vector3d& pj,
                                                 const Eigen::Vector3d& pk,
                                                 const Eigen::Vector3d& pl) {
    const Eigen::Vector3d e = pj - pi_;
    const double len = e.norm();
    if (!(len > 0.0)) throw DegenerateGeometry("hinge edge has zero length");
    const Eigen::Vector3d eh = e / len;

    const Eigen::Vector3d ak = pk - pi_;
    const double tk = ak.dot(eh);
    Eigen::Vector3d wk = ak - tk * eh;
    const double hk = wk.norm();
    const Eigen::Vector3d al = pl - pi_;
    const double tl = al.dot(eh);
    Eigen::Vector3d wl = al - tl * eh;
    const double hl = wl.norm();
    if (!(hk > 0.0) || !(hl > 0.0))
        throw DegenerateGeometry("hinge wing collapsed onto its edge");

    const Eigen::Vector3d n1 = eh.cross(wk / hk);  // unit normal, k wing plane
    const Eigen::Vector3d n2 = eh.cross(wl / hl);

    std::array<Eigen::Vector3d, 4> grad;
    grad[2] = -n1 / hk;
    grad[3] = n2 / hl;
    grad[1] = (tk / (len * hk)) * n1 - (tl / (len * hl)) * n2;
    grad[0] = ((len - tk) / (len * hk)) * n1 - ((len - tl) / (len * hl)) * n2;
    return grad;
}

std::string node_name(int row, int col) {
    return "node_" + std::to_string(row) + std::to_string(col);
}

}  // namespace orc
