#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "vidpred/io/container.hpp"

using namespace vidpred;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("core");

TEST_CASE("tensor shape and indexing") {
  Tensor t({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.ndim() == 3);
  CHECK(t.dim(1) == 3);
  t.at({1, 2, 3}) = 7.5;
  CHECK(t[23] == 7.5);
  CHECK(t.at({0, 0, 0}) == 0.0);
  CHECK_THROWS_AS((void)t.at({2, 0, 0}), std::out_of_range);
  CHECK_THROWS_AS((void)t.at({0, 0}), std::invalid_argument);
}

TEST_CASE("tensor reductions and in-place ops") {
  Tensor a({4}, {1.0, -2.0, 3.0, 0.5});
  CHECK(a.min() == -2.0);
  CHECK(a.max() == 3.0);
  CHECK(a.sum() == doctest::Approx(2.5));
  CHECK(a.all_finite());
  Tensor b({4}, 1.0);
  a.add_(b);
  CHECK(a.sum() == doctest::Approx(6.5));
  a.scale_(2.0);
  CHECK(a.sum() == doctest::Approx(13.0));
  a[0] = std::nan("");
  CHECK_FALSE(a.all_finite());
}

TEST_CASE("tensor reshape preserves data, rejects bad sizes") {
  Tensor a({2, 6}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  Tensor b = a.reshaped({3, 4});
  CHECK(b.at({2, 3}) == 11.0);
  CHECK_THROWS_AS(a.reshaped({5, 2}), std::invalid_argument);
}

TEST_CASE("shape mismatch reporting names both shapes") {
  Tensor a({2, 3}), b({3, 2});
  CHECK_THROWS_WITH_AS(check_same_shape(a, b, "here"),
                       doctest::Contains("(2,3)"), std::invalid_argument);
}

TEST_CASE("rng streams are deterministic and independent") {
  RngStream a(42, 0), b(42, 0), c(42, 1);
  for (int i = 0; i < 100; ++i) {
    const double va = a.u01();
    CHECK(va == b.u01());
    CHECK(va >= 0.0);
    CHECK(va < 1.0);
  }
  // a different stream index must decorrelate immediately
  RngStream a2(42, 0);
  CHECK(a2.u01() != c.u01());
}

TEST_CASE("rng state round-trips through the string form") {
  RngStream r(7, 3);
  for (int i = 0; i < 17; ++i) r.normal();
  const std::string s = r.state();
  std::vector<double> expect;
  for (int i = 0; i < 10; ++i) expect.push_back(r.u01());
  RngStream fresh(0, 0);
  fresh.set_state(s);
  for (int i = 0; i < 10; ++i) CHECK(fresh.u01() == expect[static_cast<size_t>(i)]);
}

TEST_CASE("rng helper ranges") {
  RngStream r(3, 0);
  for (int i = 0; i < 200; ++i) {
    const int64_t k = r.uniform_int(7);
    CHECK(k >= 0);
    CHECK(k < 7);
    const double u = r.uniform(-2.0, 5.0);
    CHECK(u >= -2.0);
    CHECK(u < 5.0);
  }
  int heads = 0;
  for (int i = 0; i < 2000; ++i) heads += r.bernoulli(0.5) ? 1 : 0;
  CHECK(heads > 850);
  CHECK(heads < 1150);
}

TEST_CASE("container round-trips arrays and meta") {
  const std::string path = (fs::temp_directory_path() / "vp_container_rt.bin").string();
  io::Container c;
  RngStream rng(5, 0);
  c.arrays["alpha/w"] = testing::rand_tensor({3, 4}, rng);
  c.arrays["beta"] = testing::rand_tensor({2, 2, 2}, rng);
  c.meta = R"({"kind":"test"})";
  c.save(path);

  io::Container d = io::Container::load(path);
  CHECK(d.meta == c.meta);
  REQUIRE(d.has("alpha/w"));
  REQUIRE(d.has("beta"));
  const Tensor& a = d.expect("alpha/w", {3, 4});
  for (int64_t i = 0; i < a.size(); ++i) CHECK(a[i] == c.arrays["alpha/w"][i]);
  CHECK_THROWS_WITH_AS((void)d.expect("alpha/w", {4, 3}),
                       doctest::Contains("alpha/w"), std::runtime_error);
  CHECK_THROWS_AS((void)d.get("missing"), std::runtime_error);
  fs::remove(path);
}

TEST_CASE("container detects corruption") {
  const std::string path = (fs::temp_directory_path() / "vp_container_bad.bin").string();
  io::Container c;
  c.arrays["x"] = Tensor({8}, 1.25);
  c.meta = "{}";
  c.save(path);

  // flip one payload byte
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(40);
  char byte = 0;
  f.seekg(40);
  f.read(&byte, 1);
  byte = static_cast<char>(byte ^ 0x40);
  f.seekp(40);
  f.write(&byte, 1);
  f.close();
  CHECK_THROWS_WITH_AS((void)io::Container::load(path),
                       doctest::Contains("checksum"), std::runtime_error);

  // truncation
  fs::resize_file(path, 30);
  CHECK_THROWS_AS((void)io::Container::load(path), std::runtime_error);
  fs::remove(path);
}

TEST_CASE("container rejects foreign files") {
  const std::string path = (fs::temp_directory_path() / "vp_container_text.bin").string();
  std::ofstream(path) << "not a container at all, just text";
  CHECK_THROWS_AS((void)io::Container::load(path), std::runtime_error);
  fs::remove(path);
}

TEST_SUITE_END();
