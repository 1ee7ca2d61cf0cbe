#include <gtest/gtest.h>

#include <omp.h>

#include <cmath>
#include <random>

#include "patent/embedding.hpp"
#include "patent/error.hpp"
#include "patent/kernels.hpp"

using namespace patent;

namespace {

std::vector<float> basis(std::size_t k) {
  std::vector<float> v(kEmbeddingDim, 0.0f);
  v[k] = 1.0f;
  return v;
}

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (double& x : m.storage()) x = n(rng);
  return m;
}

}  // namespace

TEST(Embedding, ConstructorChecks) {
  EXPECT_THROW(Embedding(std::vector<float>(10, 1.0f)), Error);
  EXPECT_THROW(Embedding(std::vector<float>(kEmbeddingDim, 0.0f)), Error);
  auto v = basis(0);
  v[3] = std::nanf("");
  EXPECT_THROW(Embedding{v}, Error);
  EXPECT_THROW(EmbedRequest(" \n\t"), Error);
  EXPECT_EQ(EmbedRequest::from_parts("T", "A").text, "T\nA");
}

TEST(Embedding, MockIsDeterministicAndUnitNorm) {
  MockEmbeddingProvider p1, p2;
  auto a = p1.embed(EmbedRequest("robotic arm with torque sensing"));
  auto b = p2.embed(EmbedRequest("robotic arm with torque sensing"));
  EXPECT_EQ(a, b);
  EXPECT_NEAR(a.norm(), 1.0, 1e-6);
  EXPECT_EQ(a.size(), kEmbeddingDim);
  // Tokenization ignores case and punctuation.
  EXPECT_EQ(p1.embed(EmbedRequest("Robotic ARM, with torque-sensing")), a);
  EXPECT_NE(MockEmbeddingProvider(7).embed(EmbedRequest("robotic arm with torque sensing")), a);
  EXPECT_EQ(p1.calls(), 2u);
}

TEST(Embedding, MockSimilarityFollowsTokenOverlap) {
  MockEmbeddingProvider p;
  auto a = p.embed(EmbedRequest("battery cathode lithium coating process"));
  auto near = p.embed(EmbedRequest("battery cathode lithium coating method"));
  auto far = p.embed(EmbedRequest("streaming video codec latency"));
  EXPECT_LT(cosine_distance(a, near), cosine_distance(a, far));
}

TEST(Embedding, CosineDistanceEdgeCases) {
  Embedding e0(basis(0)), e1(basis(1));
  EXPECT_EQ(cosine_distance(e0, e0), 0.0);
  EXPECT_DOUBLE_EQ(cosine_distance(e0, e1), 1.0);
  auto neg = basis(0);
  neg[0] = -1.0f;
  EXPECT_DOUBLE_EQ(cosine_distance(e0, Embedding(neg)), 2.0);

  std::vector<float> a = {1, 2, 3}, b = {1, 2};
  try {
    cosine_distance(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension_mismatch);
  }
  std::vector<float> z(3, 0.0f);
  EXPECT_THROW(cosine_distance(z, z), Error);
  EXPECT_THROW(cosine_distance(a, z), Error);

  // Scale invariance, checked against a direct double-precision formula.
  std::mt19937_64 rng(5);
  std::normal_distribution<float> n;
  std::vector<float> x(64), y(64), x3(64);
  for (int i = 0; i < 64; ++i) {
    x[i] = n(rng);
    y[i] = n(rng);
    x3[i] = 3 * x[i];
  }
  double dot = 0, nx = 0, ny = 0;
  for (int i = 0; i < 64; ++i) {
    dot += double(x[i]) * y[i];
    nx += double(x[i]) * x[i];
    ny += double(y[i]) * y[i];
  }
  EXPECT_NEAR(cosine_distance(x, y), 1 - dot / std::sqrt(nx * ny), 1e-12);
  EXPECT_NEAR(cosine_distance(x3, y), cosine_distance(x, y), 1e-7);
}

TEST(Embedding, TokenizeAndHash) {
  EXPECT_EQ(tokenize("Hello, World-42!"), (std::vector<std::string>{"hello", "world", "42"}));
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Kernels, ParallelMatchesReferenceBitwise) {
  std::mt19937_64 rng(11);
  int saved = omp_get_max_threads();
  for (int threads : {1, 3, 4}) {
    omp_set_num_threads(threads);
    for (auto [r, k, o] : {std::tuple{1, 1, 1}, std::tuple{37, 19, 5}, std::tuple{256, 64, 16}}) {
      Matrix in = random_matrix(r, k, rng), w = random_matrix(k, o, rng), g = random_matrix(r, o, rng);
      std::vector<double> bias(o);
      for (double& b : bias) b = std::normal_distribution<double>()(rng);

      Matrix out_p(r, o), out_r(r, o);
      kernels::affine_forward(in, w, bias, out_p);
      kernels::reference::affine_forward(in, w, bias, out_r);
      EXPECT_EQ(out_p, out_r);

      Matrix gw_p(k, o, 0.5), gw_r(k, o, 0.5);
      std::vector<double> gb_p(o, 0.25), gb_r(o, 0.25);
      kernels::affine_weight_grad(in, g, gw_p, gb_p);
      kernels::reference::affine_weight_grad(in, g, gw_r, gb_r);
      EXPECT_EQ(gw_p, gw_r);
      EXPECT_EQ(gb_p, gb_r);

      Matrix gi_p(r, k), gi_r(r, k);
      kernels::affine_input_grad(g, w, gi_p);
      kernels::reference::affine_input_grad(g, w, gi_r);
      EXPECT_EQ(gi_p, gi_r);
    }
    std::vector<std::uint64_t> buckets = {1, 99, 12345, 262143};
    std::vector<double> counts = {1, 2, 0.5, 3};
    std::vector<double> pp(kEmbeddingDim), pr(kEmbeddingDim);
    kernels::project_buckets(buckets, counts, 42, pp);
    kernels::reference::project_buckets(buckets, counts, 42, pr);
    EXPECT_EQ(pp, pr);
  }
  omp_set_num_threads(saved);
}

TEST(Kernels, AffineAgainstHandComputation) {
  Matrix in(1, 2), w(2, 2);
  in(0, 0) = 1, in(0, 1) = 2;
  w(0, 0) = 3, w(0, 1) = 4, w(1, 0) = 5, w(1, 1) = 6;
  std::vector<double> bias = {0.5, -1};
  Matrix out(1, 2);
  kernels::affine_forward(in, w, bias, out);
  EXPECT_EQ(out(0, 0), 13.5);
  EXPECT_EQ(out(0, 1), 15.0);
}

TEST(Kernels, ProjectionEntriesInRange) {
  for (std::uint64_t b = 0; b < 50; ++b) {
    for (std::size_t d = 0; d < 50; ++d) {
      double v = kernels::projection_entry(9, b, d);
      EXPECT_GE(v, -1.0);
      EXPECT_LT(v, 1.0);
      EXPECT_EQ(v, kernels::projection_entry(9, b, d));
    }
  }
}
