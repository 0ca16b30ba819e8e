#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "dritz/mesh.hpp"

using namespace dritz;

namespace {

Domain rect_case1() { return Domain::rectangle(Vec2(-1, -1), Vec2(1, 1), true); }

double dirichlet_length(const QuadMesh& mesh) {
  double len = 0.0;
  for (const auto& seg : mesh.domain.segments) {
    if (seg.type != BcType::Dirichlet) continue;
    for (const auto& e : mesh.edges[seg.id]) len += e.measure;
  }
  return len;
}

}  // namespace

TEST_CASE("uniform rectangle meshes") {
  QuadMesh m = build_uniform(rect_case1(), 2, 2);
  REQUIRE(m.cells.size() == 4);
  for (const auto& c : m.cells) CHECK(m.cell_measure(c) == Catch::Approx(1.0));
  CHECK(m.total_measure() == Catch::Approx(4.0));

  QuadMesh big = build_uniform(rect_case1(), 100, 100);
  CHECK(big.cells.size() == 10000);
  CHECK(big.total_measure() == Catch::Approx(4.0).margin(1e-10));
}

TEST_CASE("uniform L-shape meshes") {
  QuadMesh m = build_uniform(Domain::lshape(), 2, 2);
  REQUIRE(m.cells.size() == 3);
  CHECK(m.total_measure() == Catch::Approx(3.0));

  SECTION("misaligned grids are rejected") {
    CHECK_THROWS_AS(build_uniform(Domain::lshape(), 3, 2), std::invalid_argument);
    CHECK_THROWS_AS(build_uniform(Domain::lshape(), 2, 5), std::invalid_argument);
  }
}

TEST_CASE("degenerate resolutions are rejected") {
  CHECK_THROWS_AS(build_uniform(rect_case1(), 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_uniform(rect_case1(), 2, -1), std::invalid_argument);
}

TEST_CASE("refinement splits marked cells into four children") {
  QuadMesh m = build_uniform(rect_case1(), 2, 2);
  const CellId target = m.cells.front().id;
  QuadMesh r = refine(m, {target});
  REQUIRE(r.cells.size() == 7);
  int children = 0;
  for (const auto& c : r.cells) {
    if (c.depth == 1) {
      CHECK(r.cell_measure(c) == Catch::Approx(0.25));
      ++children;
    }
  }
  CHECK(children == 4);
  CHECK(r.total_measure() == Catch::Approx(m.total_measure()).epsilon(1e-12));
}

TEST_CASE("refinement with an empty mark set is the identity") {
  QuadMesh m = build_uniform(rect_case1(), 4, 4);
  QuadMesh r = refine(m, {});
  CHECK(r.cells.size() == m.cells.size());
}

TEST_CASE("refining every cell of a 2x2 mesh preserves the total measure") {
  QuadMesh m = build_uniform(rect_case1(), 2, 2);
  std::vector<CellId> all;
  for (const auto& c : m.cells) all.push_back(c.id);
  QuadMesh r = refine(m, all);
  CHECK(r.cells.size() == 16);
  // oracle: the children's measures, summed independently
  double sum = 0.0;
  for (const auto& c : r.cells) sum += r.cell_measure(c);
  CHECK(sum == Catch::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("stale and duplicate ids are rejected") {
  QuadMesh m = build_uniform(rect_case1(), 2, 2);
  const CellId id = m.cells.front().id;
  CHECK_THROWS_AS(refine(m, {id, id}), std::invalid_argument);
  QuadMesh r = refine(m, {id});
  CHECK_THROWS_AS(refine(r, {id}), std::invalid_argument);  // id no longer active
}

TEST_CASE("nesting: children stay inside their parent") {
  QuadMesh m = build_uniform(Domain::lshape(), 4, 4);
  for (int round = 0; round < 2; ++round) {
    const Cell parent = m.cells[round + 1];
    QuadMesh r = refine(m, {parent.id});
    for (const auto& c : r.cells) {
      if (c.depth != parent.depth + 1 || id_root(c.id) != id_root(parent.id)) continue;
      CHECK(c.lo.x() >= parent.lo.x() - 1e-15);
      CHECK(c.lo.y() >= parent.lo.y() - 1e-15);
      CHECK(c.lo.x() + c.size.x() <= parent.lo.x() + parent.size.x() + 1e-15);
      CHECK(c.lo.y() + c.size.y() <= parent.lo.y() + parent.size.y() + 1e-15);
    }
  }
}

TEST_CASE("min cell size") {
  QuadMesh m = build_uniform(rect_case1(), 2, 2);
  CHECK(min_cell_size(m) == Catch::Approx(1.0));
  QuadMesh r = refine(m, {m.cells.front().id});
  CHECK(min_cell_size(r) == Catch::Approx(0.5));
  QuadMesh empty;
  CHECK_THROWS_AS(min_cell_size(empty), std::invalid_argument);
}

TEST_CASE("polar quarter-annulus mesh") {
  Domain d = Domain::quarter_annulus(1.0, 10.0);
  QuadMesh m = build_uniform(d, 10, 10);
  REQUIRE(m.cells.size() == 100);
  CHECK(m.total_measure() == Catch::Approx(kPi * 99.0 / 4.0).margin(1e-10));

  // mapped measure of the smallest cell: the innermost ring, evaluated
  // numerically from the analytic sector-area formula
  const double dr = 0.9, dth = kPi / 20.0;
  const double smallest = 0.5 * ((1.0 + dr) * (1.0 + dr) - 1.0) * dth;
  CHECK(min_cell_size(m) == Catch::Approx(std::sqrt(smallest)));

  SECTION("centroids are mapped chart midpoints") {
    const Cell& c = m.cells.front();
    const Vec2 mid = c.lo + 0.5 * c.size;
    const Vec2 x = m.cell_centroid(c);
    CHECK(x.x() == Catch::Approx(mid.x() * std::cos(mid.y())));
    CHECK(x.y() == Catch::Approx(mid.x() * std::sin(mid.y())));
  }
}

TEST_CASE("boundary edges cover the boundary") {
  SECTION("case-I rectangle") {
    QuadMesh m = build_uniform(rect_case1(), 8, 8);
    CHECK(dirichlet_length(m) == Catch::Approx(6.0).margin(1e-10));
    double neumann_len = 0;
    for (const auto& e : m.edges[0]) neumann_len += e.measure;
    CHECK(neumann_len == Catch::Approx(2.0).margin(1e-10));
  }
  SECTION("L-shape") {
    QuadMesh m = build_uniform(Domain::lshape(), 4, 4);
    CHECK(dirichlet_length(m) == Catch::Approx(7.0).margin(1e-10));
    double neumann_len = 0;
    for (const auto& e : m.edges[0]) neumann_len += e.measure;
    CHECK(neumann_len == Catch::Approx(1.0).margin(1e-10));
  }
  SECTION("quarter annulus, curved pieces by arc length") {
    QuadMesh m = build_uniform(Domain::quarter_annulus(1.0, 10.0), 6, 6);
    double hole = 0, outer = 0, bottom = 0, left = 0;
    for (const auto& e : m.edges[2]) hole += e.measure;
    for (const auto& e : m.edges[3]) outer += e.measure;
    for (const auto& e : m.edges[0]) bottom += e.measure;
    for (const auto& e : m.edges[1]) left += e.measure;
    CHECK(hole == Catch::Approx(kPi / 2.0).margin(1e-10));
    CHECK(outer == Catch::Approx(10.0 * kPi / 2.0).margin(1e-10));
    CHECK(bottom == Catch::Approx(9.0).margin(1e-10));
    CHECK(left == Catch::Approx(9.0).margin(1e-10));
  }
}

TEST_CASE("boundary coverage survives refinement") {
  QuadMesh m = build_uniform(Domain::lshape(), 4, 4);
  // refine a boundary cell twice
  QuadMesh r1 = refine(m, {m.cells.front().id});
  QuadMesh r2 = refine(r1, {r1.cells.front().id, r1.cells.back().id});
  CHECK(dirichlet_length(r2) == Catch::Approx(7.0).margin(1e-10));
  for (const auto& group : r2.edges) {
    for (const auto& e : group) {
      CHECK(e.measure > 0.0);
      CHECK(e.normal.norm() == Catch::Approx(1.0).margin(1e-12));
    }
  }
}

TEST_CASE("edges carry correct normals") {
  QuadMesh m = build_uniform(rect_case1(), 2, 2);
  for (const auto& e : m.edges[0]) {  // Neumann: x = 1
    CHECK(e.normal.x() == Catch::Approx(1.0));
    CHECK(e.centroid.x() == Catch::Approx(1.0));
  }
  QuadMesh qa = build_uniform(Domain::quarter_annulus(1.0, 10.0), 4, 4);
  for (const auto& e : qa.edges[2]) {  // hole arc: inward normal
    CHECK(e.normal.dot(e.centroid) == Catch::Approx(-1.0).margin(1e-12));
  }
  for (const auto& e : qa.edges[0]) {  // bottom radial edge
    CHECK(e.normal.y() == Catch::Approx(-1.0));
    CHECK(e.centroid.y() == Catch::Approx(0.0).margin(1e-15));
  }
}

TEST_CASE("determinism: identical inputs build identical meshes") {
  QuadMesh a = build_uniform(Domain::lshape(), 6, 6);
  QuadMesh b = build_uniform(Domain::lshape(), 6, 6);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].id == b.cells[i].id);
    CHECK(a.cells[i].lo == b.cells[i].lo);
  }
  std::ostringstream ca, cb;
  export_cells_csv(a, ca);
  export_cells_csv(b, cb);
  CHECK(ca.str() == cb.str());
}

TEST_CASE("cell ids encode root, depth, and path") {
  QuadMesh m = build_uniform(rect_case1(), 4, 4);
  const Cell& c = m.cells[5];
  const CellId child = child_id(c.id, 3);
  CHECK(id_root(child) == id_root(c.id));
  CHECK(id_depth(child) == 1);
  CHECK(id_path(child) == 3);
  CHECK(path_on_face(child, 0, 1));
  CHECK(path_on_face(child, 1, 1));
  CHECK_FALSE(path_on_face(child, 0, 0));
}

TEST_CASE("csv export schema") {
  QuadMesh m = build_uniform(rect_case1(), 2, 2);
  std::ostringstream cells, edges;
  export_cells_csv(m, cells);
  export_edges_csv(m, edges);
  const std::string cell_csv = cells.str();
  CHECK(cell_csv.rfind("id,cx,cy,measure,depth\n", 0) == 0);
  CHECK(edges.str().rfind("segment,cx,cy,measure,nx,ny\n", 0) == 0);
  // 4 cells + header
  CHECK(std::count(cell_csv.begin(), cell_csv.end(), '\n') == 5);
}
