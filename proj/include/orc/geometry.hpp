#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

#include "orc/errors.hpp"

// Miura-ori sheet geometry: flat crease pattern construction and closed-form
// rigid folding kinematics. Lengths are millimetres, angles degrees unless a
// name says otherwise.
//
// Grid conventions. Vertices live on a rows x cols grid, node id =
// row * cols + col. Row 0 is the bottom edge (clamped end), row rows-1 the
// top edge (payload stations). In the flat pattern the column lines are
// straight creases and the row lines zigzag. Folding with a positive fold
// angle lifts the odd rows: z alternates 0, H, 0, H, ... by row parity.
//
// The fold angle is measured from the flat state at the column-strip creases
// (the vertical creases): fold_angle = 180 deg minus the dihedral angle
// between the two facets sharing a vertical crease. 0 deg is the flat sheet,
// 180 deg the fully collapsed one. Negative fold angles mirror the mesh
// through the flat plane (z -> -z).

namespace orc {

enum class CreaseType { mountain, valley };

struct CreaseEdge {
    int a = 0, b = 0;
    CreaseType type = CreaseType::mountain;
};

// Corner ids in order (i,j), (i,j+1), (i+1,j+1), (i+1,j).
struct FacetQuad {
    std::array<int, 4> nodes{};
};

struct CreasePattern {
    int rows = 0, cols = 0;
    double panel_a = 0.0;    // horizontal (row-direction) edge length, mm
    double panel_b = 0.0;    // vertical (column-direction) edge length, mm
    double gamma_deg = 0.0;  // sector angle between the two edge families
    std::vector<Eigen::Vector2d> vertices;  // flat coordinates, mm
    std::vector<CreaseEdge> crease_edges;   // every grid edge, with M/V label
    std::vector<FacetQuad> facets;

    int node_index(int row, int col) const { return row * cols + col; }
    int node_count() const { return rows * cols; }
};

struct Bar {
    int a = 0, b = 0;
    double rest_length = 0.0;  // mm
};

// Torsional hinge about edge (i,j); k and l are the wing nodes of the two
// triangles adjacent to the edge after the facet diagonal split. rest_angle
// uses the signed_dihedral() convention, radians.
struct Hinge {
    int i = 0, j = 0, k = 0, l = 0;
    double rest_angle = 0.0;
    bool is_facet = false;  // facet-bending (diagonal) hinge vs crease hinge
};

struct FoldedMesh {
    int rows = 0, cols = 0;
    double panel_a = 0.0, panel_b = 0.0, gamma_deg = 0.0;
    double fold_angle_deg = 0.0;
    Eigen::Matrix3Xd node_positions;  // mm, one column per node
    std::vector<Bar> bars;            // 45 crease bars + 18 diagonals for 4x7
    std::vector<Hinge> hinges;

    int node_index(int row, int col) const { return row * cols + col; }
    int node_count() const { return static_cast<int>(node_positions.cols()); }
};

// Builds the flat crease pattern. Requires rows, cols >= 2, positive panel
// sides and 0 < gamma_deg < 90; throws DegenerateGeometry otherwise.
CreasePattern build_miura_pattern(int rows, int cols, double panel_a,
                                  double panel_b, double gamma_deg);

// Rigid closed-form fold of the pattern. |fold_angle_deg| must be < 180.
FoldedMesh fold_miura(const CreasePattern& pattern, double fold_angle_deg);

// Nodes rigidly attached to the shaker platform: the corner vertex of the
// bottom row plus its bottom-row neighbours, min(3, cols) nodes in total.
// Two points leave a zero-stiffness rigid rotation about the line through
// them; the third, non-collinear with the first two in the folded state,
// removes it.
std::vector<int> clamped_nodes(const FoldedMesh& mesh);

// Signed dihedral angle about edge (pi -> pj) between the half-plane through
// pk and the half-plane through pl, in [0, 2*pi). A flat configuration gives
// pi (180 deg). Stable away from the 0/2*pi cut (fully collapsed hinges).
double signed_dihedral(const Eigen::Vector3d& pi_, const Eigen::Vector3d& pj,
                       const Eigen::Vector3d& pk, const Eigen::Vector3d& pl);

// Gradient of signed_dihedral with respect to the four node positions,
// ordered (i, j, k, l). Exact analytic expression; rad per unit length.
std::array<Eigen::Vector3d, 4> dihedral_gradient(const Eigen::Vector3d& pi_,
                                                 const Eigen::Vector3d& pj,
                                                 const Eigen::Vector3d& pk,
                                                 const Eigen::Vector3d& pl);

// "node_<row><col>" column label used by the trajectory CSV format.
std::string node_name(int row, int col);

}  // namespace orc
