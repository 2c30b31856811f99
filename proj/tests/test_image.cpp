#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "specmix/image.hpp"
#include "specmix/io.hpp"
#include "specmix/rng.hpp"

using namespace specmix;
namespace fs = std::filesystem;

namespace {

ImageTensor make_image(const std::string& id, int rows, int cols, int bands,
                       std::uint64_t seed) {
  ImageTensor img{id, rows, cols, bands, {}};
  img.values.resize(static_cast<std::size_t>(rows) * cols * bands);
  Rng rng(seed);
  for (auto& v : img.values) v = rng.normal();
  return img;
}

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("specmix_test_" + tag);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("raw container round trip at the motivating image size") {
  const fs::path dir = temp_dir("img_raw");
  const ImageTensor img = make_image("wheat-a", 67, 53, 101, 7);
  REQUIRE(img.n_pixels() == 3551);
  save_image(img, (dir / "wheat-a.json").string());
  const ImageTensor back = load_image((dir / "wheat-a.json").string(), ImageFormat::RawF64);
  REQUIRE(back.rows == 67);
  REQUIRE(back.cols == 53);
  REQUIRE(back.bands == 101);
  REQUIRE(back.values == img.values);
}

TEST_CASE("single pixel image loads") {
  const fs::path dir = temp_dir("img_tiny");
  ImageTensor img{"one", 1, 1, 1, {0.5}};
  save_image(img, (dir / "one.json").string());
  const ImageTensor back = load_image((dir / "one.json").string(), ImageFormat::RawF64);
  REQUIRE(back.values.size() == 1);
  REQUIRE(back.values[0] == 0.5);
}

TEST_CASE("payload size mismatch is a dimension error") {
  const fs::path dir = temp_dir("img_bad");
  std::ofstream((dir / "bad.json").string())
      << R"({"id":"bad","rows":2,"cols":2,"bands":3,"dtype":"f64",)"
      << R"("order":"row-major-band-fastest","payload":"bad.raw"})";
  std::vector<double> eleven(11, 1.0);
  detail::write_raw_payload((dir / "bad.raw").string(), eleven);
  REQUIRE_THROWS_AS(load_image((dir / "bad.json").string(), ImageFormat::RawF64),
                    FileDimensionError);
}

TEST_CASE("non-finite payload rejected") {
  const fs::path dir = temp_dir("img_nan");
  ImageTensor img{"nan", 1, 2, 1, {1.0, std::nan("")}};
  std::ofstream((dir / "nan.json").string())
      << R"({"id":"nan","rows":1,"cols":2,"bands":1,"dtype":"f64",)"
      << R"("order":"row-major-band-fastest","payload":"nan.raw"})";
  detail::write_raw_payload((dir / "nan.raw").string(), img.values);
  REQUIRE_THROWS_AS(load_image((dir / "nan.json").string(), ImageFormat::RawF64),
                    NonFiniteValueError);
}

TEST_CASE("missing file is unreadable") {
  REQUIRE_THROWS_AS(load_image("/nonexistent/image.json", ImageFormat::RawF64),
                    UnreadableFileError);
}

TEST_CASE("csv band-major fixture") {
  const fs::path dir = temp_dir("img_csv");
  std::ofstream((dir / "small.csv").string()) << "small,1,2,2\n"
                                              << "1.0,2.0\n"
                                              << "3.0,4.0\n";
  const ImageTensor img = load_image((dir / "small.csv").string(),
                                     ImageFormat::CsvBandMajor);
  REQUIRE(img.at(0, 0, 0) == 1.0);
  REQUIRE(img.at(0, 1, 0) == 2.0);
  REQUIRE(img.at(0, 0, 1) == 3.0);
  REQUIRE(img.at(0, 1, 1) == 4.0);
}

TEST_CASE("flatten stacks the nine motivating image sizes") {
  const int dims[9][2] = {{67, 53}, {62, 64}, {65, 55}, {61, 34}, {39, 69},
                          {56, 54}, {56, 49}, {78, 54}, {50, 44}};
  std::vector<ImageTensor> images;
  for (int l = 0; l < 9; ++l) {
    ImageTensor img{"img" + std::to_string(l), dims[l][0], dims[l][1], 101, {}};
    img.values.assign(static_cast<std::size_t>(img.n_pixels()) * 101, 0.25);
    images.push_back(std::move(img));
  }
  const PixelTable table = flatten_images(images);
  REQUIRE(table.n() == 28039);
  REQUIRE(table.p() == 101);
}

TEST_CASE("flatten of a single pixel image") {
  const PixelTable table = flatten_images({make_image("x", 1, 1, 5, 3)});
  REQUIRE(table.n() == 1);
  REQUIRE(table.p() == 5);
}

TEST_CASE("row-major global indices across two images") {
  const ImageTensor a = make_image("a", 2, 3, 4, 1);
  const ImageTensor b = make_image("b", 2, 3, 4, 2);
  const PixelTable table = flatten_images({a, b});
  REQUIRE(table.n() == 12);
  // pixel (image b, row 1, col 2) -> offset 6 + 1*3 + 2 = 11
  REQUIRE(table.global_index(1, 1, 2) == 11);
  for (int band = 0; band < 4; ++band)
    REQUIRE(table.data(11, band) == b.at(1, 2, band));
}

TEST_CASE("band count mismatch rejected") {
  REQUIRE_THROWS_AS(
      flatten_images({make_image("a", 2, 2, 3, 1), make_image("b", 2, 2, 4, 2)}),
      ValidationError);
}

TEST_CASE("flatten then extract is the identity") {
  const std::vector<ImageTensor> images = {make_image("a", 3, 5, 7, 11),
                                           make_image("b", 4, 2, 7, 12)};
  const PixelTable table = flatten_images(images);
  for (std::size_t l = 0; l < images.size(); ++l) {
    const ImageTensor back = extract_image(table, l);
    REQUIRE(back.id == images[l].id);
    REQUIRE(back.values == images[l].values);  // bit-exact
  }
}

TEST_CASE("greyscale of a constant spectrum is the constant") {
  ImageTensor img{"c", 2, 2, 3, std::vector<double>(12, 4.25)};
  const Eigen::MatrixXd grey = greyscale(img);
  REQUIRE(grey.minCoeff() == 4.25);
  REQUIRE(grey.maxCoeff() == 4.25);
}

TEST_CASE("greyscale averages the bands") {
  ImageTensor img{"m", 1, 1, 2, {0.0, 1.0}};
  REQUIRE(greyscale(img)(0, 0) == 0.5);
}

TEST_CASE("greyscale matches an independent mean and ignores band order") {
  const ImageTensor img = make_image("g", 2, 2, 5, 21);
  const Eigen::MatrixXd grey = greyscale(img);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      double sum = 0.0;  // separate summation route
      for (int b = 4; b >= 0; --b) sum += img.at(r, c, b);
      REQUIRE_THAT(grey(r, c), Catch::Matchers::WithinAbs(sum / 5.0, 1e-15));
    }
  ImageTensor permuted = img;
  const int perm[5] = {3, 0, 4, 1, 2};
  for (std::int64_t px = 0; px < img.n_pixels(); ++px)
    for (int b = 0; b < 5; ++b)
      permuted.values[px * 5 + b] = img.values[px * 5 + perm[b]];
  const Eigen::MatrixXd grey2 = greyscale(permuted);
  REQUIRE((grey - grey2).cwiseAbs().maxCoeff() < 1e-12);
}
