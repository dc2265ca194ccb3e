#include <cstring>
#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "climashift/dataset_io.hpp"
#include "climashift/errors.hpp"
#include "climashift/file_util.hpp"
#include "climashift/synth.hpp"
#include "test_support.hpp"

using namespace climashift;
namespace fs = std::filesystem;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

void flip_byte(const fs::path& path, std::size_t offset) {
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(static_cast<std::streamoff>(offset));
  char c = 0;
  f.read(&c, 1);
  c = static_cast<char>(c ^ 0x5a);
  f.seekp(static_cast<std::streamoff>(offset));
  f.write(&c, 1);
}

class DatasetIo : public ::testing::Test {
 protected:
  void SetUp() override { ds_ = build_dataset(test_support::small_generation(), 21); }
  Dataset ds_;
};

}  // namespace

TEST_F(DatasetIo, RoundTripF64IsBitExact) {
  const auto dir = test_support::scratch_dir("io-f64");
  write_dataset(ds_, dir, DType::f64);
  const Dataset back = read_dataset(dir);
  EXPECT_EQ(back.grid, ds_.grid);
  EXPECT_EQ(back.layout.oracles, ds_.layout.oracles);
  EXPECT_EQ(back.layout.scenarios, ds_.layout.scenarios);
  for (const auto& [key, s] : ds_.series) {
    const auto& b = back.series.at(key);
    ASSERT_EQ(b.outputs.size(), s.outputs.size());
    for (std::size_t i = 0; i < s.outputs.size(); ++i) ASSERT_TRUE(same_bits(b.outputs[i], s.outputs[i]));
    for (std::size_t i = 0; i < s.inputs->size(); ++i) ASSERT_TRUE(same_bits((*b.inputs)[i], (*s.inputs)[i]));
  }
}

TEST_F(DatasetIo, RoundTripF32RoundsToNearestFloat) {
  const auto dir = test_support::scratch_dir("io-f32");
  write_dataset(ds_, dir, DType::f32);
  const Dataset back = read_dataset(dir);
  for (const auto& [key, s] : ds_.series) {
    const auto& b = back.series.at(key);
    for (std::size_t i = 0; i < s.outputs.size(); ++i) {
      ASSERT_TRUE(same_bits(b.outputs[i], static_cast<double>(static_cast<float>(s.outputs[i]))));
    }
  }
  // A second write of what was read back reproduces the same bytes.
  const auto dir2 = test_support::scratch_dir("io-f32-again");
  write_dataset(back, dir2, DType::f32);
  EXPECT_EQ(read_file(dir / tensor_path("synth-awi", "ssp126", false)),
            read_file(dir2 / tensor_path("synth-awi", "ssp126", false)));
}

TEST_F(DatasetIo, WritesAreIdempotent) {
  const auto a = test_support::scratch_dir("io-idem-a");
  const auto b = test_support::scratch_dir("io-idem-b");
  const auto ma = write_dataset(ds_, a);
  const auto mb = write_dataset(build_dataset(test_support::small_generation(), 21), b);
  EXPECT_EQ(ma.checksums, mb.checksums);
  EXPECT_EQ(read_file(a / "manifest.json"), read_file(b / "manifest.json"));
}

TEST_F(DatasetIo, ManifestListsEveryTensor) {
  const auto dir = test_support::scratch_dir("io-manifest");
  const auto m = write_dataset(ds_, dir);
  EXPECT_EQ(m.checksums.size(), 2u * 5u * 2u);
  for (const auto& [rel, sum] : m.checksums) EXPECT_EQ(file_checksum(dir / rel), sum) << rel;
  const auto doc = nlohmann::json::parse(read_file(dir / "manifest.json"));
  EXPECT_EQ(doc.at("format_version").get<int>(), kDatasetFormatVersion);
  EXPECT_EQ(doc.at("byte_order").get<std::string>(), "little");
}

TEST_F(DatasetIo, DetectsFlippedByte) {
  const auto dir = test_support::scratch_dir("io-flip");
  write_dataset(ds_, dir);
  flip_byte(dir / tensor_path("synth-ecearth", "ssp370", false), 100);
  EXPECT_THROW(read_dataset(dir), IntegrityError);
}

TEST_F(DatasetIo, DetectsTruncation) {
  const auto dir = test_support::scratch_dir("io-trunc");
  write_dataset(ds_, dir);
  const auto path = dir / tensor_path("synth-awi", "historical", true);
  fs::resize_file(path, fs::file_size(path) - 8);
  EXPECT_THROW(read_dataset(dir), IntegrityError);
}

TEST_F(DatasetIo, MissingTensorIsIoError) {
  const auto dir = test_support::scratch_dir("io-missing");
  write_dataset(ds_, dir);
  fs::remove(dir / tensor_path("synth-awi", "ssp585", false));
  EXPECT_THROW(read_dataset(dir), IoError);
}

TEST_F(DatasetIo, UnknownVersionIsRejected) {
  const auto dir = test_support::scratch_dir("io-version");
  write_dataset(ds_, dir);
  auto doc = nlohmann::json::parse(read_file(dir / "manifest.json"));
  doc["format_version"] = 99;
  atomic_write(dir / "manifest.json", doc.dump());
  EXPECT_THROW(read_dataset(dir), VersionError);
}

TEST_F(DatasetIo, ChunkYearsPartitionsSeries) {
  const auto& s = ds_.at("synth-awi", "ssp245");
  const auto chunks = chunk_years(s, ds_.grid);
  ASSERT_EQ(chunks.size(), 20u);
  const std::size_t cells = ds_.grid.cells();
  EXPECT_EQ(chunks[2].year, 2017);
  EXPECT_EQ(chunks[2].inputs.size(), 12 * kNumForcers * cells);
  for (std::size_t i = 0; i < chunks[2].outputs.size(); ++i) {
    EXPECT_EQ(chunks[2].outputs[i], s.outputs[2 * 12 * kNumOutputs * cells + i]);
  }
}

TEST_F(DatasetIo, ChunkYearsRejectsPartialYear) {
  ScenarioSeries s = ds_.at("synth-awi", "ssp245");
  s.outputs.resize(s.outputs.size() - kNumOutputs * ds_.grid.cells());
  EXPECT_THROW(chunk_years(s, ds_.grid), ContractError);
}

TEST(FileUtil, ChecksumHexRoundTrip) {
  EXPECT_EQ(checksum_hex(0xabcULL), "0000000000000abc");
  EXPECT_EQ(parse_checksum_hex("0000000000000abc"), 0xabcULL);
  EXPECT_THROW(parse_checksum_hex("xyz"), InvalidArgument);
}

TEST(FileUtil, AtomicWriteLeavesNoTemporary) {
  const auto dir = test_support::scratch_dir("atomic");
  atomic_write(dir / "sub" / "a.txt", "hello");
  EXPECT_EQ(read_file(dir / "sub" / "a.txt"), "hello");
  EXPECT_FALSE(fs::exists(dir / "sub" / "a.txt.tmp"));
}
