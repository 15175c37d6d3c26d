#include <catch2/catch.hpp>

#include "actionlm/viz/charts.hpp"
#include "actionlm/viz/embed.hpp"
#include "actionlm/viz/pitch.hpp"
#include "support/fd.hpp"
#include "support/xmlcheck.hpp"

using namespace actionlm;
using testsupport::xml_well_formed;

namespace {
long count_occurrences(const std::string& hay, const std::string& needle) {
  long n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size())) ++n;
  return n;
}

viz::PitchScene demo_scene(std::size_t n) {
  viz::PitchScene scene;
  for (std::size_t i = 0; i < n; ++i)
    scene.actions.push_back(viz::SceneAction{5.0 + 10.0 * static_cast<double>(i), 30.0 + (i % 2 ? 10.0 : -5.0),
                                             i % 2 == 0, "pass"});
  return scene;
}
}  // namespace

TEST_CASE("the checker itself rejects malformed xml", "[viz]") {
  std::string why;
  CHECK(xml_well_formed("<a><b x=\"1\"/></a>", &why));
  CHECK_FALSE(xml_well_formed("<a><b></a>", &why));
  CHECK_FALSE(xml_well_formed("<a x=unquoted></a>", &why));
  CHECK_FALSE(xml_well_formed("<a>", &why));
  CHECK_FALSE(xml_well_formed("<a>&bad</a>", &why));
}

TEST_CASE("empty scene renders the pitch furniture only", "[viz]") {
  std::string svg = viz::render_pitch(viz::PitchScene{});
  std::string why;
  CHECK(xml_well_formed(svg, &why));
  INFO(why);
  CHECK(count_occurrences(svg, "<rect") == 3);    // outline + two penalty areas
  CHECK(count_occurrences(svg, "<circle") == 2);  // center circle + spot
  CHECK(count_occurrences(svg, "r=\"8.00\"") == 0);
}

TEST_CASE("markers, arrows, and determinism", "[viz]") {
  auto scene = demo_scene(10);
  scene.highlight = 9;
  std::string svg = viz::render_pitch(scene);
  CHECK(xml_well_formed(svg));
  CHECK(count_occurrences(svg, "r=\"8.00\"") == 10);           // one marker per action
  CHECK(count_occurrences(svg, " opacity=\"0.85\"") == 9 * 3);  // shaft + two barbs per arrow
  CHECK(count_occurrences(svg, "r=\"11.00\"") == 1);           // highlight ring
  CHECK(count_occurrences(svg, ">pass<") == 10);               // action labels
  CHECK(svg == viz::render_pitch(scene));                      // byte determinism

  SECTION("out-of-bounds coordinates are rejected") {
    viz::PitchScene bad;
    bad.actions.push_back(viz::SceneAction{106.0, 10.0, true, "pass"});
    CHECK_THROWS_AS(viz::render_pitch(bad), ValidationError);
  }
}

TEST_CASE("comparison panels", "[viz]") {
  auto gt = demo_scene(5);
  gt.title = "Ground truth";
  auto make_pred = [&](double x) {
    viz::PitchScene p = gt;
    p.title.clear();
    p.actions.back().x = x;
    return p;
  };
  std::vector<std::pair<std::string, viz::PitchScene>> preds = {
      {"Markov", make_pred(50)}, {"MLP", make_pred(60)}, {"Transformer (large)", make_pred(70)}};
  std::string svg = viz::render_comparison(gt, preds);
  CHECK(xml_well_formed(svg));
  CHECK(count_occurrences(svg, "<g transform=") == 4);  // four panels
  CHECK(count_occurrences(svg, ">Ground truth<") == 1);
  CHECK(count_occurrences(svg, ">Transformer (large)<") == 1);

  SECTION("single scene is one captioned panel") {
    std::string one = viz::render_comparison(gt, {});
    CHECK(xml_well_formed(one));
    CHECK(count_occurrences(one, "<g transform=") == 1);
  }
  SECTION("diverging shared context is rejected") {
    viz::PitchScene rogue = gt;
    rogue.actions[0].x += 1.0;
    CHECK_THROWS_AS(viz::render_comparison(gt, {{"bad", rogue}}), ValidationError);
    viz::PitchScene shorter = gt;
    shorter.actions.pop_back();
    CHECK_THROWS_AS(viz::render_comparison(gt, {{"short", shorter}}), ValidationError);
  }
}

TEST_CASE("scaling charts", "[viz]") {
  std::vector<train::ScalingRecord> records;
  for (double f : {0.25, 0.5, 1.0}) records.push_back({"dataset_size", f, 0.30 + 0.1 * f, 1, ""});
  for (long k : {1L, 3L, 9L}) records.push_back({"context_size", static_cast<double>(k), 0.35 + 0.005 * k, 1, ""});
  records.push_back({"parameters", 365565.0, 0.41, 1, ""});
  records.push_back({"parameters", 548415.0, 0.42, 1, ""});
  auto charts = viz::plot_scaling(records);
  REQUIRE(charts.size() == 3);  // one chart per axis present
  for (const auto& [axis, svg] : charts) {
    INFO(axis);
    CHECK(xml_well_formed(svg));
    CHECK(count_occurrences(svg, "<polyline") == 1);
  }

  SECTION("single point still charts") {
    std::vector<train::ScalingRecord> one = {{"context_size", 9.0, 0.4, 1, ""}};
    auto c = viz::plot_scaling(one);
    REQUIRE(c.size() == 1);
    CHECK(xml_well_formed(c[0].second));
    CHECK(count_occurrences(c[0].second, "<circle") == 1);
  }
  SECTION("polyline vertices pass the data through monotonically") {
    // Accuracy strictly increases with the axis, so the drawn y must
    // strictly decrease (SVG y points down).
    auto c = viz::plot_scaling(records);
    const std::string svg = c[0].second;  // dataset_size
    const std::size_t start = svg.find("<polyline points=\"");
    REQUIRE(start != std::string::npos);
    const std::size_t end = svg.find('"', start + 18);
    std::istringstream pts(svg.substr(start + 18, end - start - 18));
    std::string pair;
    std::vector<double> ys;
    while (pts >> pair) ys.push_back(std::stod(pair.substr(pair.find(',') + 1)));
    REQUIRE(ys.size() == 3);
    CHECK(ys[0] > ys[1]);
    CHECK(ys[1] > ys[2]);
  }
  SECTION("records without accuracy are ignored, empty set rejected") {
    std::vector<train::ScalingRecord> skipped = {{"parameters", 0.0, std::nullopt, 1, "skipped"}};
    CHECK(viz::plot_scaling(skipped).empty());
    CHECK_THROWS_AS(viz::plot_scaling({}), ValidationError);
  }
}

TEST_CASE("pca reconstructs planar data", "[viz]") {
  // Rows lie exactly in a 2-plane: projection must preserve pairwise
  // distances.
  Rng rng(13);
  const long n = 12, d = 7;
  std::vector<double> u(d), w(d);
  for (long j = 0; j < d; ++j) {
    u[static_cast<std::size_t>(j)] = rng.normal();
    w[static_cast<std::size_t>(j)] = rng.normal();
  }
  // Gram-Schmidt to make the plane orthonormal.
  double nu = 0;
  for (double z : u) nu += z * z;
  for (double& z : u) z /= std::sqrt(nu);
  double dot = 0;
  for (long j = 0; j < d; ++j) dot += u[static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(j)];
  for (long j = 0; j < d; ++j) w[static_cast<std::size_t>(j)] -= dot * u[static_cast<std::size_t>(j)];
  double nw = 0;
  for (double z : w) nw += z * z;
  for (double& z : w) z /= std::sqrt(nw);

  std::vector<double> coords(static_cast<std::size_t>(n) * 2);
  std::vector<double> x(static_cast<std::size_t>(n) * d);
  for (long i = 0; i < n; ++i) {
    const double a = rng.uniform(-3, 3), b = rng.uniform(-2, 2);
    coords[static_cast<std::size_t>(i) * 2] = a;
    coords[static_cast<std::size_t>(i) * 2 + 1] = b;
    for (long j = 0; j < d; ++j)
      x[static_cast<std::size_t>(i) * d + j] =
          5.0 + a * u[static_cast<std::size_t>(j)] + b * w[static_cast<std::size_t>(j)];
  }
  auto pca = viz::pca_top2(x, n, d);
  for (long i = 0; i < n; ++i)
    for (long j = i + 1; j < n; ++j) {
      const double dx0 = coords[static_cast<std::size_t>(i) * 2] - coords[static_cast<std::size_t>(j) * 2];
      const double dy0 = coords[static_cast<std::size_t>(i) * 2 + 1] - coords[static_cast<std::size_t>(j) * 2 + 1];
      const double dx1 = pca.projected[static_cast<std::size_t>(i) * 2] - pca.projected[static_cast<std::size_t>(j) * 2];
      const double dy1 =
          pca.projected[static_cast<std::size_t>(i) * 2 + 1] - pca.projected[static_cast<std::size_t>(j) * 2 + 1];
      CHECK(std::sqrt(dx0 * dx0 + dy0 * dy0) == Approx(std::sqrt(dx1 * dx1 + dy1 * dy1)).margin(1e-6));
    }
}

TEST_CASE("pca residual equals the eigenvalue tail", "[viz]") {
  Rng rng(29);
  const long n = 9, d = 5;
  auto x = testsupport::random_tensor({n, d}, rng).values();
  auto pca = viz::pca_top2(x, n, d);

  // Center (as pca does), then measure the reconstruction residual directly.
  std::vector<double> xc(x);
  for (long j = 0; j < d; ++j) {
    double mean = 0;
    for (long i = 0; i < n; ++i) mean += xc[static_cast<std::size_t>(i) * d + j];
    mean /= n;
    for (long i = 0; i < n; ++i) xc[static_cast<std::size_t>(i) * d + j] -= mean;
  }
  double residual = 0, total = 0;
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < d; ++j) {
      double recon = 0;
      for (long c = 0; c < 2; ++c)
        recon += pca.projected[static_cast<std::size_t>(i) * 2 + c] * pca.components[static_cast<std::size_t>(j) * 2 + c];
      const double diff = xc[static_cast<std::size_t>(i) * d + j] - recon;
      residual += diff * diff;
      total += xc[static_cast<std::size_t>(i) * d + j] * xc[static_cast<std::size_t>(i) * d + j];
    }
  }
  double tail = 0;
  for (std::size_t e = 2; e < pca.eigenvalues.size(); ++e) tail += pca.eigenvalues[e];
  CHECK(residual == Approx(tail).margin(1e-8));
  // Independent route: the eigenvalues must sum to the trace of Xc^T Xc.
  double eigsum = 0;
  for (double e : pca.eigenvalues) eigsum += e;
  CHECK(eigsum == Approx(total).margin(1e-8));
}

TEST_CASE("embedding export schema", "[viz]") {
  auto vocab = tok::Vocabulary::build({"pass", "shot"});  // V = 400
  const long v = vocab.size(), d = 4;
  Rng rng(7);
  auto emb = testsupport::random_tensor({v, d}, rng).values();

  SECTION("pca projection fills p0/p1") {
    std::string csv = viz::embeddings_csv(emb, v, d, vocab, viz::Projection::pca);
    std::istringstream in(csv);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header == "id,token,is_home,action_type,bx,by,e0,e1,e2,e3,p0,p1");
    long rows = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (rows == 0) {
        CHECK(line.rfind("0,\"False, pass, 0, 0\",False,pass,0,0,", 0) == 0);
      }
      ++rows;
    }
    CHECK(rows == v);
  }
  SECTION("projection none leaves zeros") {
    std::string csv = viz::embeddings_csv(emb, v, d, vocab, viz::Projection::none);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      CHECK(line.substr(line.size() - 4) == ",0,0");
    }
  }
  SECTION("row count must match the vocabulary") {
    CHECK_THROWS_AS(viz::embeddings_csv(emb, v - 1, d, vocab, viz::Projection::none), ValidationError);
    CHECK_THROWS_AS(viz::projection_from("umap"), ConfigError);
  }
}
