#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "ulab/error.hpp"
#include "ulab/metrics.hpp"
#include "ulab/unlearn.hpp"

using namespace ulab;
using namespace ulab::data;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) { return fs::temp_directory_path() / name; }

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("blobs are balanced, class-major and seeded") {
  const Dataset a = generate_blobs({4, 25, 6, 0.5, 3});
  const Dataset b = generate_blobs({4, 25, 6, 0.5, 3});
  const Dataset c = generate_blobs({4, 25, 6, 0.5, 4});
  CHECK(a.size() == 100);
  CHECK(a.dims() == 6);
  CHECK(a.class_count == 4);
  CHECK(a.scaling == Scaling::raw);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.labels[i] == static_cast<int>(i / 25));
  CHECK(a.features == b.features);
  CHECK_FALSE(a.features == c.features);
  CHECK_NOTHROW(a.validate());
  CHECK_THROWS_AS(generate_blobs({1, 5, 2, 0.5, 1}), DomainError);
  CHECK_THROWS_AS(generate_blobs({2, 5, 2, 0.0, 1}), DomainError);
}

TEST_CASE("blob class means sit at radius 4*spread") {
  const double spread = 0.25;
  const Dataset ds = generate_blobs({3, 4000, 5, spread, 8});
  for (int k = 0; k < 3; ++k) {
    std::vector<double> mean(5, 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.labels[i] != k) continue;
      for (std::size_t d = 0; d < 5; ++d) mean[d] += ds.features(i, d) / 4000.0;
    }
    double r2 = 0.0;
    for (double m : mean) r2 += m * m;
    // Sample-mean error is spread/sqrt(4000) per dim.
    CHECK(std::sqrt(r2) == doctest::Approx(4.0 * spread).epsilon(0.03));
  }
}

TEST_CASE("tiny spread collapses every row toward the origin") {
  const Dataset ds = generate_blobs({4, 30, 8, 1e-6, 2});
  for (double v : ds.features.data) CHECK(std::abs(v) < 1e-4);
}

TEST_CASE("point clusters at fixed centers are fitted exactly within 50 epochs") {
  // Centers at radius 2 with 1e-6 jitter.
  Rng rng(2);
  Dataset ds;
  ds.class_count = 4;
  ds.features = Matrix(120, 8);
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<double> center(8);
    double norm = 0.0;
    for (double& c : center) {
      c = rng.normal();
      norm += c * c;
    }
    for (double& c : center) c *= 2.0 / std::sqrt(norm);
    for (std::size_t i = 0; i < 30; ++i) {
      const std::size_t r = k * 30 + i;
      for (std::size_t d = 0; d < 8; ++d) ds.features(r, d) = center[d] + 1e-6 * rng.normal();
      ds.labels.push_back(static_cast<int>(k));
    }
  }
  const std::size_t hidden[] = {16};
  nn::Network net = nn::init_random(nn::NetworkShape::mlp(8, hidden, 4), 1);
  unlearn::TrainConfig tc;
  tc.epochs = 50;
  tc.batch_size = 16;
  tc.optimizer.learning_rate = 1e-2;
  unlearn::train(net, ds, tc);
  CHECK(metrics::accuracy(net, ds) == 1.0);
}

TEST_CASE("split sizes, coverage and determinism") {
  const Dataset ds = generate_blobs({2, 50, 2, 0.5, 1});
  const DatasetSplit s = split(ds, 0.05, 9);
  CHECK(s.unlearn_indices.size() == 5);
  CHECK(s.remain_indices.size() == 95);
  std::set<std::size_t> all(s.unlearn_indices.begin(), s.unlearn_indices.end());
  for (std::size_t i : s.remain_indices) CHECK(all.insert(i).second);
  CHECK(all.size() == 100);
  CHECK(std::is_sorted(s.unlearn_indices.begin(), s.unlearn_indices.end()));
  CHECK(split(ds, 0.05, 9).unlearn_indices == s.unlearn_indices);
  CHECK(split(ds, 0.3, 1).unlearn_indices != split(ds, 0.3, 2).unlearn_indices);
  CHECK_THROWS_AS(split(ds, 0.0, 1), DomainError);
  CHECK_THROWS_AS(split(ds, 1.0, 1), DomainError);
  CHECK_THROWS_AS(split(ds, 0.001, 1), DomainError);
}

TEST_CASE("split of a CIFAR-sized index set") {
  Dataset ds;
  ds.features = Matrix(50000, 1);
  ds.labels.assign(50000, 0);
  ds.labels[1] = 1;
  ds.class_count = 2;
  const DatasetSplit s = split(ds, 0.20, 3);
  CHECK(s.unlearn_indices.size() == 10000);
  CHECK(s.remain_indices.size() == 40000);
}

TEST_CASE("split invariants over many sizes and seeds") {
  for (std::size_t n : {3, 10, 37, 101, 500}) {
    Dataset ds;
    ds.features = Matrix(n, 1);
    ds.labels.assign(n, 0);
    ds.labels[0] = 1;
    ds.class_count = 2;
    for (double ratio : {0.2, 0.35, 0.5, 0.65}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const DatasetSplit s = split(ds, ratio, seed);
        CHECK(s.unlearn_indices.size() == static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))));
        std::vector<int> seen(n, 0);
        for (std::size_t i : s.unlearn_indices) ++seen[i];
        for (std::size_t i : s.remain_indices) ++seen[i];
        for (int v : seen) CHECK(v == 1);
      }
    }
  }
}

TEST_CASE("idx pixels scale by 1/255 and round trip") {
  const auto img = temp_file("ulab_idx_images");
  const auto lab = temp_file("ulab_idx_labels");
  const std::vector<std::uint8_t> pixels = {0, 128, 255, 64, 1, 2, 3, 4};
  const std::vector<std::uint8_t> labels = {3, 0};
  write_idx_images(img, pixels, 2, 2, 2);
  write_idx_labels(lab, labels);
  const Dataset ds = load_idx(img, lab);
  CHECK(ds.size() == 2);
  CHECK(ds.dims() == 4);
  CHECK(ds.class_count == 4);
  CHECK(ds.scaling == Scaling::unit_range);
  CHECK(ds.features(0, 0) == 0.0);
  CHECK(ds.features(0, 1) == doctest::Approx(0.50196).epsilon(1e-5));
  CHECK(ds.features(0, 2) == 1.0);
  CHECK(ds.features(0, 3) == doctest::Approx(0.25098).epsilon(1e-5));
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    CHECK(static_cast<std::uint8_t>(std::lround(ds.features.data[i] * 255.0)) == pixels[i]);
  }
  CHECK(ds.labels == std::vector<int>{3, 0});

  // Label file passed as the image file and vice versa.
  CHECK_THROWS_AS(load_idx(lab, lab), FormatError);
  CHECK_THROWS_AS(load_idx(img, img), FormatError);

  const std::vector<std::uint8_t> three = {1, 1, 1};
  write_idx_labels(lab, three);
  CHECK_THROWS_AS(load_idx(img, lab), ConsistencyError);

  write_bytes(img, {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 9, 9});
  write_idx_labels(lab, labels);
  CHECK_THROWS_AS(load_idx(img, lab), IoError);
  write_bytes(img, {0, 0, 8});
  CHECK_THROWS_AS(load_idx(img, lab), IoError);
  CHECK_THROWS_AS(load_idx(temp_file("ulab_missing_idx"), lab), IoError);
  fs::remove(img);
  fs::remove(lab);
}

TEST_CASE("csv export and import are exact") {
  const Dataset ds = generate_blobs({3, 4, 5, 0.7, 2});
  const auto path = temp_file("ulab_blobs.csv");
  write_csv(ds, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "f0,f1,f2,f3,f4,label");
  in.close();
  const Dataset back = read_csv(path);
  CHECK(back.features == ds.features);
  CHECK(back.labels == ds.labels);
  CHECK(back.class_count == 3);
  std::ofstream bad(path);
  bad << "f0,f1,label\n1.0,2.0\n";
  bad.close();
  CHECK_THROWS_AS(read_csv(path), FormatError);
  fs::remove(path);
}

TEST_CASE("dataset validation") {
  Dataset ds = generate_blobs({2, 3, 2, 0.5, 1});
  ds.labels.pop_back();
  CHECK_THROWS_AS(ds.validate(), ConsistencyError);
  ds = generate_blobs({2, 3, 2, 0.5, 1});
  ds.labels[0] = 2;
  CHECK_THROWS_AS(ds.validate(), DomainError);
  ds = generate_blobs({2, 3, 2, 0.5, 1});
  ds.features(0, 0) = std::nan("");
  CHECK_THROWS_AS(ds.validate(), NumericError);
  const std::size_t idx[] = {4, 1};
  const Dataset sub = subset(generate_blobs({2, 3, 2, 0.5, 1}), idx);
  CHECK(sub.labels == std::vector<int>{1, 0});
}
