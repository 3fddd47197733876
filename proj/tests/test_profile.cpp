#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "tau1/profile.hpp"

using namespace tau1;

TEST_CASE("profile_from_records: worked examples") {
  SUBCASE("empty input") {
    const auto p = profile_from_records(std::vector<CellId>{});
    CHECK(p.n == 0);
    CHECK(p.k == 0);
    CHECK(p.z.empty());
  }
  SUBCASE("mixed frequencies") {
    const std::vector<CellId> recs = {"a", "a", "b", "c"};
    const auto p = profile_from_records(recs);
    CHECK(p.n == 4);
    CHECK(p.k == 3);
    CHECK(p.z_at(1) == 2);
    CHECK(p.z_at(2) == 1);
    CHECK(p.z.size() == 2);
  }
  SUBCASE("single cell") {
    const std::vector<CellId> recs = {"a", "a", "a"};
    const auto p = profile_from_records(recs);
    CHECK(p.n == 3);
    CHECK(p.k == 1);
    CHECK(p.z_at(3) == 1);
    CHECK(p.z.size() == 1);
  }
}

TEST_CASE("profile invariants on random multisets") {
  std::mt19937_64 rng(20240811);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = static_cast<int>(rng() % 400);
    const int pool = 1 + static_cast<int>(rng() % 60);
    std::vector<CellId> recs;
    recs.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) recs.push_back("id" + std::to_string(rng() % pool));
    const auto p = profile_from_records(recs);

    std::int64_t mass = 0, cells = 0;
    for (const auto& [i, zi] : p.z) {
      mass += i * zi;
      cells += zi;
    }
    REQUIRE(mass == p.n);
    REQUIRE(cells == p.k);
    REQUIRE(p.n == n);
    p.validate();

    // permutation invariance
    std::shuffle(recs.begin(), recs.end(), rng);
    const auto q = profile_from_records(recs);
    REQUIRE(q.n == p.n);
    REQUIRE(q.k == p.k);
    REQUIRE(q.z == p.z);
  }
}

TEST_CASE("z_bar") {
  FrequencyProfile p;
  p.n = 4;
  p.k = 3;
  p.z = {{1, 2}, {2, 1}};
  CHECK(z_bar(p, 1) == 3);
  CHECK(z_bar(p, 2) == 1);
  CHECK(z_bar(p, 3) == 0);
  CHECK(z_bar(FrequencyProfile{}, 5) == 0);
  CHECK_THROWS_AS(z_bar(p, 0), DomainError);
}

TEST_CASE("true_tau1: worked examples") {
  auto paired = [](std::initializer_list<std::pair<const char*, std::int64_t>> s,
                   std::initializer_list<std::pair<const char*, std::int64_t>> pop) {
    PairedCounts pc;
    for (const auto& [id, c] : s) pc.sample.counts[id] = c;
    for (const auto& [id, c] : pop) pc.population.counts[id] = c;
    return pc;
  };
  CHECK(true_tau1(paired({{"a", 1}}, {{"a", 1}})) == 1);
  CHECK(true_tau1(paired({{"a", 1}, {"b", 2}}, {{"a", 2}, {"b", 2}})) == 0);
  CHECK(true_tau1(paired({{"a", 1}, {"b", 1}, {"c", 3}}, {{"a", 1}, {"b", 1}, {"c", 5}})) == 2);
  CHECK_THROWS_AS(true_tau1(paired({{"a", 2}}, {{"a", 1}})), DomainError);
  CHECK_THROWS_AS(true_tau1(paired({{"a", 1}}, {{"b", 1}})), DomainError);
}

TEST_CASE("true_tau1 equals a brute-force double loop on random instances") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int cells = 1 + static_cast<int>(rng() % 20);
    PairedCounts pc;
    std::vector<std::pair<std::int64_t, std::int64_t>> raw;
    for (int j = 0; j < cells; ++j) {
      const std::int64_t s = static_cast<std::int64_t>(rng() % 4);
      const std::int64_t extra = static_cast<std::int64_t>(rng() % 4);
      const std::int64_t pop = s + extra;
      raw.emplace_back(s, pop);
      const CellId id = "cell" + std::to_string(j);
      if (s > 0) pc.sample.counts[id] = s;
      if (pop > 0) pc.population.counts[id] = pop;
    }
    std::int64_t brute = 0;
    for (const auto& [s, pop] : raw)
      if (s == 1 && pop == 1) ++brute;
    REQUIRE(true_tau1(pc) == brute);
  }
}

TEST_CASE("profile JSON round trip and schema") {
  FrequencyProfile p;
  p.n = 7;
  p.k = 5;
  p.z = {{1, 3}, {2, 2}};
  const auto j = profile_to_json(p);
  CHECK(j["n"] == 7);
  CHECK(j["k"] == 5);
  CHECK(j["z"]["1"] == 3);
  CHECK(j["z"]["2"] == 2);
  const auto q = profile_from_json(j);
  CHECK(q.n == p.n);
  CHECK(q.k == p.k);
  CHECK(q.z == p.z);

  CHECK_THROWS_AS(profile_from_json(nlohmann::json{{"n", 2}, {"k", 1}}), ParseError);
  // inconsistent totals rejected
  nlohmann::json bad = {{"n", 5}, {"k", 1}, {"z", {{"2", 1}}}};
  CHECK_THROWS_AS(profile_from_json(bad), DomainError);
}

TEST_CASE("record reader: key column selection") {
  std::istringstream lines("a\nb\na\n");
  const auto recs = read_records(lines, {});
  CHECK(recs.size() == 3);
  CHECK(recs[0] == "a");

  std::istringstream csv("age,sex,zip\n34,F,10001\n34,F,10001\n35,M,10002\n");
  const auto keyed = read_records(csv, {1, 3}, ',', true);
  REQUIRE(keyed.size() == 3);
  CHECK(keyed[0] == keyed[1]);
  CHECK(keyed[0] != keyed[2]);
  CHECK(keyed[0] == std::string("34") + kKeySeparator + "10001");

  std::istringstream short_line("a,b\n");
  CHECK_THROWS_AS(read_records(short_line, {3}), ParseError);
}

TEST_CASE("cell count CSV reader") {
  std::istringstream csv("cell,count\nA,2\nB,1\n");
  const auto cells = read_cell_count_csv(csv);
  CHECK(cells.counts.at("A") == 2);
  CHECK(cells.counts.at("B") == 1);
  const auto p = profile_from_counts(cells);
  CHECK(p.n == 3);
  CHECK(p.k == 2);
  CHECK(p.z_at(1) == 1);
  CHECK(p.z_at(2) == 1);

  std::istringstream bad_header("id,n\nA,2\n");
  CHECK_THROWS_AS(read_cell_count_csv(bad_header), ParseError);
  std::istringstream zero("cell,count\nA,0\n");
  CHECK_THROWS_AS(read_cell_count_csv(zero), ParseError);
}
