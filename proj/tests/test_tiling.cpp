#include <catch_amalgamated.hpp>

#include <schmidt/properties.hpp>

using namespace schmidt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Precondition;
}

const RationalPoint kBase{{1, 2}, 7};

}  // namespace

TEST_CASE("toy voronoi example") {
  auto cells = voronoi_cells_1d({0.5, 1.5}, 0.0, 2.0, 1.0);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0] == std::pair<double, double>{0.0, 1.0});
  CHECK(cells[1] == std::pair<double, double>{1.0, 2.0});
}

TEST_CASE("constants") {
  auto m = preset("cat2");
  CHECK(a_star_for(0.05, 0.01, m.sigma1) == 2);
  CHECK_THAT(distortion_bound(1, 0.1, 1, 2), WithinAbs(1.10517, 1e-5));
  CHECK_THAT(distortion_bound(1, 0.1, 1, 2), WithinRel(std::exp(0.1), 1e-14));
  CHECK(distortion_bound(0, 0.1, 1, 2) == 1);
  CHECK_THAT(density_constant(0.01, 3, 2, m.sigma1, m.sigma2, 1), WithinAbs(0.005416, 5e-7));
  CHECK(code_of([&] { density_constant(0.01, 2, 2, m.sigma1, m.sigma2, 1); }) == ErrorCode::InvalidParams);
  CHECK(code_of([&] { density_constant(0.01, 3, 1, m.sigma1, m.sigma2, 1); }) == ErrorCode::InvalidParams);
}

TEST_CASE("level structure on the cat map") {
  auto m = preset("cat2");
  Tiling<double> t(m, {}, kBase);
  auto l0 = t.level(0);
  REQUIRE(l0.size() == 1);
  CHECK_THAT(l0[0].cell.volume(), WithinRel(0.05, 1e-12));
  for (int n = 1; n <= 6; ++n) {
    auto lv = t.level(n);
    auto dom = t.domain(n);
    for (std::size_t i = 0; i < lv.size(); ++i) {
      CHECK(lv[i].cell.depth(lv[i].center) >= 0.025 - 1e-15);
      CHECK(lv[i].cell.max_radius(lv[i].center) <= 0.05 + 1e-15);
      if (i + 1 < lv.size()) CHECK(lv[i].cell.hi() == lv[i + 1].cell.lo());
    }
    CHECK(lv.front().cell.lo() <= dom.lo());
    CHECK(lv.back().cell.hi() >= dom.hi());
  }
}

TEST_CASE("local queries agree with the full level") {
  auto m = preset("cat2");
  Tiling<double> t(m, {.seed = 5}, kBase);
  auto full = t.level(9);
  Tiling<double> fresh(m, {.seed = 5}, kBase);
  Rng rng(1);
  for (int s = 0; s < 30; ++s) {
    const auto& a = full[rng.index(full.size())];
    auto local = fresh.atoms_in(9, Cell<double>::box(a.center, 0.001));
    bool found = false;
    for (const auto& b : local) found |= (b.key == a.key && b.cell.v == a.cell.v);
    CHECK(found);
    fresh.clear_cache();
  }
}

TEST_CASE("seeded construction is deterministic and seed-sensitive") {
  auto m = preset("cat2");
  Tiling<double> a(m, {.seed = 3}, kBase), b(m, {.seed = 3}, kBase), c(m, {.seed = 4}, kBase);
  auto la = a.level(8), lb = b.level(8), lc = c.level(8);
  REQUIRE(la.size() == lb.size());
  for (std::size_t i = 0; i < la.size(); ++i) CHECK(la[i].key == lb[i].key);
  bool differs = la.size() != lc.size();
  for (std::size_t i = 0; !differs && i < la.size(); ++i) differs = la[i].key != lc[i].key;
  CHECK(differs);
}

TEST_CASE("descend and lookup") {
  auto m = preset("cat2");
  Tiling<double> t(m, {.max_level = 12}, kBase);
  auto root = t.root_atom();
  auto child = t.descend(root, 3);
  CHECK(child.level == 3);
  CHECK(t.image(root, 3).contains_cell(child.cell));
  CHECK(t.is_atom(child));
  auto fake = child;
  fake.cell = Cell<double>::interval(child.cell.lo(), child.cell.hi() + 1e-3);
  CHECK_FALSE(t.is_atom(fake));

  CHECK(code_of([&] { t.descend(root, 2); }) == ErrorCode::Precondition);
  CHECK(code_of([&] { t.level(13); }) == ErrorCode::TilingDepthExceeded);
  CHECK(code_of([&] { t.atom_containing({1.0}, 2); }) == ErrorCode::OutsideDomain);
  auto lv = t.level(4);
  double boundary = lv[3].cell.hi();
  CHECK(code_of([&] { t.atom_at(4, {boundary}); }) == ErrorCode::OnBoundary);
  auto inside = t.atom_at(4, {lv[3].center[0]});
  CHECK(inside.key == lv[3].key);
}

TEST_CASE("no child when the cell is too small") {
  auto m = preset("cat2");
  Tiling<double> t(m, {}, kBase);
  Atom<double> tiny = t.level(3)[2];
  tiny.cell = Cell<double>::interval(tiny.center[0] - 1e-4, tiny.center[0] + 1e-4);
  CHECK(code_of([&] { t.descend(tiny, 3); }) == ErrorCode::NoChild);
}

TEST_CASE("property suite passes at moderate depth") {
  auto m = preset("cat2");
  Tiling<double> t(m, {}, kBase);
  auto rep = verify_properties(t, 7, {.msg0_max_m = 6, .bs = {3}, .msg1_samples = 50});
  for (const auto& c : rep.checks) {
    INFO(c.name << " " << c.detail);
    CHECK((c.passed || c.skipped));
  }
  auto shallow = verify_properties(t, 2, {.msg1_samples = 5});
  REQUIRE(shallow.find("MSG0"));
  CHECK(shallow.find("MSG0")->skipped);
  CHECK(shallow.find("MSG0")->detail.find("insufficient depth") != std::string::npos);
}

TEST_CASE("two-dimensional non-conformal leaves") {
  auto m = preset("cat4_nonconformal");
  Tiling<double> t(m, {.delta = 0.05, .tau = 0.01, .seed = 2}, RationalPoint{{1, 2, 3, 4}, 11});
  auto rep = verify_properties(t, 2, {.msg1_samples = 20});
  for (const auto& c : rep.checks) {
    INFO(c.name << " " << c.detail);
    CHECK((c.passed || c.skipped));
  }
  auto lv = t.level(2);
  for (const auto& a : lv) {
    CHECK(a.cell.depth(a.center) >= 0.495 * 0.05);
    CHECK(a.cell.max_radius(a.center) <= 0.05);
  }
}

TEST_CASE("doubling map tiling") {
  auto m = preset("doubling");
  Tiling<double> t(m, {}, RationalPoint{{1}, 5});
  auto rep = verify_properties(t, 8, {.a = 4, .bs = {4}, .msg1_samples = 30});
  for (const auto& c : rep.checks) {
    INFO(c.name << " " << c.detail);
    CHECK((c.passed || c.skipped));
  }
}

TEST_CASE("extended precision tiling matches double at shallow levels") {
  auto m = preset("cat2");
  Tiling<double> d(m, {.seed = 9}, kBase);
  Tiling<long double> l(m, {.seed = 9}, kBase);
  Tiling<MediumPrecision> h(m, {.seed = 9}, kBase);
  for (int n = 1; n <= 6; ++n) {
    auto ad = d.level(n);
    auto al = l.level(n);
    auto ah = h.level(n);
    REQUIRE(ad.size() == al.size());
    REQUIRE(ad.size() == ah.size());
    for (std::size_t i = 0; i < ad.size(); ++i) {
      CHECK(std::fabs(ad[i].center[0] - static_cast<double>(ah[i].center[0])) < 1e-12);
      CHECK(std::fabs(ad[i].center[0] - static_cast<double>(al[i].center[0])) < 1e-12);
    }
  }
}

TEST_CASE("deep local query in high precision") {
  auto m = preset("cat2");
  Tiling<HighPrecision> t(m, {}, kBase);
  HighPrecision w("0.0123456789");
  auto a = t.atom_containing({w}, 150);
  CHECK(a.level == 150);
  auto pull = t.image(a, -150);
  CHECK(pull.contains({w}));
  CHECK(t.base_diameter(a) < HighPrecision("1e-60"));
  auto kid = t.descend(a, 3);
  CHECK(t.image(a, 3).contains_cell(kid.cell));
}
