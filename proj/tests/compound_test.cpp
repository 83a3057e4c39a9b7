#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cerfuse/compound.hpp"
#include "oracles.hpp"

namespace cerfuse {
namespace {

ProbVector basic(std::map<std::string, double> mass) {
  auto s = EmotionSpace::default_basic();
  std::vector<double> v(s->size(), 0.0);
  for (const auto& [k, p] : mass) v[s->index_of(k)] = p;
  return ProbVector(v, s);
}

std::map<std::string, double> by_name(const ProbVector& p) {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < p.size(); ++i) out[p.space()->label(i)] = p[i];
  return out;
}

std::vector<std::pair<std::string, std::string>> pairs_of(const CompoundScheme& scheme) {
  std::vector<std::pair<std::string, std::string>> out;
  const auto& s = *scheme.source_space();
  for (const auto& c : scheme.compounds()) out.emplace_back(s.label(c.first), s.label(c.second));
  return out;
}

TEST(PpaTest, HappinessAndSurprise) {
  auto scheme = CompoundScheme::default_cexpr();
  auto p = basic({{"Happiness", 0.5}, {"Surprise", 0.5}});
  auto raw = ppa_raw(p, scheme);
  // Surprise is in five pairs, Happiness in one.
  double total = 0;
  for (double r : raw) total += r;
  EXPECT_NEAR(total, 3.0, 1e-12);
  auto out = ppa(p, scheme);
  EXPECT_NEAR(out.at("Happily Surprised"), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(argmax_label(out), "Happily Surprised");
}

TEST(PpaTest, NeutralAndOtherAreIgnored) {
  auto scheme = CompoundScheme::default_cexpr();
  auto with = ppa(basic({{"Neutral", 0.6}, {"Sadness", 0.2}, {"Fear", 0.2}}), scheme);
  auto without = ppa(basic({{"Other", 0.6}, {"Sadness", 0.2}, {"Fear", 0.2}}), scheme);
  for (std::size_t k = 0; k < with.size(); ++k) EXPECT_NEAR(with[k], without[k], 1e-15);
  EXPECT_EQ(argmax_label(with), "Sadly Fearful");
}

TEST(PpaTest, NoReferencedMassIsAllZero) {
  try {
    ppa(basic({{"Neutral", 0.5}, {"Other", 0.5}}), CompoundScheme::default_cexpr());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAllZero);
  }
}

TEST(PpaTest, MatchesPairSumOracle) {
  std::mt19937_64 rng(31);
  auto scheme = CompoundScheme::default_cexpr();
  auto pairs = pairs_of(scheme);
  for (int trial = 0; trial < 300; ++trial) {
    auto p = ProbVector(oracle::random_simplex(rng, 8), EmotionSpace::default_basic());
    auto expected = oracle::ppa_pair_sums(by_name(p), pairs);
    double s = 0;
    for (double v : expected) s += v;
    auto out = ppa(p, scheme);
    for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_NEAR(out[k], expected[k] / s, 1e-12);
  }
}

TEST(PpaTest, MonotoneInPairMass) {
  std::mt19937_64 rng(32);
  auto scheme = CompoundScheme::default_cexpr();
  auto s = EmotionSpace::default_basic();
  for (int trial = 0; trial < 200; ++trial) {
    auto v = oracle::random_simplex(rng, 8);
    auto raw = ppa_raw(ProbVector(v, s), scheme);
    // Move mass from Neutral into Happiness: HaSu raw score cannot drop.
    std::size_t n = s->index_of("Neutral"), h = s->index_of("Happiness");
    v[h] += v[n];
    v[n] = 0;
    auto moved = ppa_raw(ProbVector(v, s), scheme);
    EXPECT_GE(moved[1], raw[1] - 1e-15);
  }
}

TEST(PpaTest, AlignsForeignSubspace) {
  auto scheme = CompoundScheme::default_cexpr();
  auto seven = make_space({"Neutral", "Anger", "Disgust", "Fear", "Happiness", "Sadness", "Surprise"});
  auto out = ppa(ProbVector({0, 0, 0, 0, 0.5, 0, 0.5}, seven), scheme);
  EXPECT_NEAR(out.at("Happily Surprised"), 1.0 / 3.0, 1e-12);
  auto foreign = make_space({"Joy", "Surprise"});
  EXPECT_THROW(ppa(ProbVector({0.5, 0.5}, foreign), scheme), Error);
}

CompoundScheme two_by_two() {
  return CompoundScheme(make_space({"A", "B", "C"}), {{"AB", {"A", "B"}}, {"BC", {"B", "C"}}});
}

TEST(PfsaTest, PrototypesAreMeansOfCorrectSamples) {
  auto scheme = two_by_two();
  std::vector<PrototypeSample> samples{
      {FeatureVector({1, 0}), 0, 0}, {FeatureVector({3, 0}), 0, 0},
      {FeatureVector({0, 5}), 0, 1},  // misclassified, ignored
      {FeatureVector({0, 1}), 1, 1}, {FeatureVector({-1, 0}), 2, 2}};
  auto bank = build_prototypes(samples, scheme);
  EXPECT_EQ(bank.counts().at(0), 2u);
  EXPECT_EQ(oracle::vec(bank.basic_prototypes().at(0).values()), (std::vector<double>{2, 0}));
  // AB = mean((2,0), (0,1)) scaled to unit norm.
  double n = std::sqrt(1.0 + 0.25);
  EXPECT_NEAR(bank.compound_prototypes()[0][0], 1.0 / n, 1e-12);
  EXPECT_NEAR(bank.compound_prototypes()[0][1], 0.5 / n, 1e-12);
  for (const auto& c : bank.compound_prototypes()) EXPECT_NEAR(c.norm(), 1.0, 1e-12);
}

TEST(PfsaTest, TemperatureExample) {
  auto scheme = two_by_two();
  std::vector<PrototypeSample> samples{{FeatureVector({1, 1}), 0, 0},
                                       {FeatureVector({1, -1}), 1, 1},
                                       {FeatureVector({-1, -1}), 2, 2}};
  auto bank = build_prototypes(samples, scheme);
  // AB points along (1, 0), BC along (0, -1).
  auto out = pfsa(FeatureVector({1, 0}), bank, Temperature(0.5));
  EXPECT_NEAR(out[0], std::exp(2.0) / (std::exp(2.0) + 1.0), 1e-12);
  auto sims = pfsa_similarities(FeatureVector({1, 0}), bank);
  EXPECT_NEAR(sims[0], 1.0, 1e-12);
  EXPECT_NEAR(sims[1], 0.0, 1e-12);
}

TEST(PfsaTest, Errors) {
  auto scheme = two_by_two();
  auto code = [&](std::vector<PrototypeSample> samples) {
    try {
      build_prototypes(samples, scheme);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  EXPECT_EQ(code({{FeatureVector({1, 0}), 0, 0}, {FeatureVector({0, 1}), 1, 1}}), ErrorCode::kMissingClass);
  EXPECT_EQ(code({{FeatureVector({1, 0}), 0, 0}, {FeatureVector({1, 0}), 1, 1}, {FeatureVector({1, 0}), 2, 2},
                  {FeatureVector({1, 0, 0}), 2, 2}}),
            ErrorCode::kDimensionMismatch);
  // A and B cancel: AB prototype is the zero vector.
  EXPECT_EQ(code({{FeatureVector({1, 0}), 0, 0}, {FeatureVector({-1, 0}), 1, 1}, {FeatureVector({0, 1}), 2, 2}}),
            ErrorCode::kZeroNorm);

  std::vector<PrototypeSample> ok{{FeatureVector({1, 1}), 0, 0}, {FeatureVector({1, -1}), 1, 1},
                                  {FeatureVector({-1, -1}), 2, 2}};
  auto bank = build_prototypes(ok, scheme);
  try {
    pfsa(FeatureVector({0, 0}), bank, Temperature(0.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroFeature);
  }
  EXPECT_THROW(pfsa(FeatureVector({1, 0, 0}), bank, Temperature(0.5)), Error);
}

std::vector<PrototypeSample> random_samples(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> g(0, 1);
  std::vector<PrototypeSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> f(dim);
    for (double& v : f) v = g(rng);
    std::size_t gold = i % 8, pred = rng() % 4 == 0 ? (gold + 1) % 8 : gold;
    out.push_back({FeatureVector(f), gold, pred});
  }
  return out;
}

TEST(PfsaTest, BankIndependentOfSampleOrder) {
  std::mt19937_64 rng(33);
  auto scheme = CompoundScheme::default_cexpr();
  auto samples = random_samples(rng, 400, 12);
  auto bank = build_prototypes(samples, scheme);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(samples.begin(), samples.end(), rng);
    EXPECT_TRUE(build_prototypes(samples, scheme) == bank);
  }
}

TEST(PfsaTest, InvariantUnderQueryScaling) {
  std::mt19937_64 rng(34);
  auto scheme = CompoundScheme::default_cexpr();
  auto bank = build_prototypes(random_samples(rng, 400, 12), scheme);
  std::uniform_real_distribution<double> k(0.01, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto f = oracle::vec(random_samples(rng, 1, 12).front().features.values());
    auto scaled = f;
    double s = k(rng);
    for (double& v : scaled) v *= s;
    auto a = pfsa(FeatureVector(f), bank, Temperature(0.5));
    auto b = pfsa(FeatureVector(scaled), bank, Temperature(0.5));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(PfsaTest, SerializationRoundTrip) {
  std::mt19937_64 rng(35);
  auto scheme = CompoundScheme::default_cexpr();
  auto bank = build_prototypes(random_samples(rng, 300, 8), scheme);
  auto text = serialize_bank(bank);
  EXPECT_TRUE(deserialize_bank(text) == bank);
  try {
    deserialize_bank(text.substr(0, text.size() / 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorrupt);
  }
  auto wrong = text;
  auto pos = wrong.find("\"version\": 1");
  ASSERT_NE(pos, std::string::npos);
  wrong.replace(pos, 12, "\"version\": 9");
  try {
    deserialize_bank(wrong);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVersionMismatch);
  }
}

}  // namespace
}  // namespace cerfuse
