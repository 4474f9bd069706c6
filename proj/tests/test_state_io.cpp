#include <doctest.h>

#include <filesystem>

#include "seed/error.hpp"
#include "seed/state_io.hpp"
#include "state_compare.hpp"
#include "stream_fixture.hpp"

using namespace seed;
using seed::testing::same_state;

namespace {

ErrorKind decode_error(const std::vector<unsigned char>& bytes) {
  try {
    decode_state(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected decode to fail");
  return ErrorKind::Io;
}

EnsembleState trained(int tasks, RepresentationMode mode = RepresentationMode::FullCovariance) {
  const TaskStream stream = seed::testing::blob_stream(tasks, 2, 61);
  EnsembleState state = make_ensemble(seed::testing::tiny_net(), 3, 5);
  TrainConfig cfg = seed::testing::quick_training(SelectionStrategy::Random);
  cfg.mode = mode;
  for (int t = 0; t < tasks; ++t) train_task(state, stream.train[static_cast<std::size_t>(t)], cfg);
  return state;
}

}  // namespace

TEST_CASE("state files round-trip losslessly") {
  for (auto mode : {RepresentationMode::FullCovariance, RepresentationMode::DiagonalCovariance, RepresentationMode::Prototype}) {
    const RunStateFile file{R"({"seed": 5})", trained(4, mode)};
    const auto bytes = encode_state(file);
    const RunStateFile back = decode_state(bytes);
    CHECK(back.config_json == file.config_json);
    CHECK(same_state(back.state, file.state));
    CHECK(back.state.net.embed_dim == file.state.net.embed_dim);
    REQUIRE(back.state.logs.size() == file.state.logs.size());
    for (std::size_t i = 0; i < back.state.logs.size(); ++i) {
      CHECK(back.state.logs[i].trained == file.state.logs[i].trained);
      CHECK(back.state.logs[i].overlap == file.state.logs[i].overlap);
    }
    CHECK(encode_state(back) == bytes);
  }
}

TEST_CASE("version mismatch, corruption and truncation are detected") {
  const auto bytes = encode_state(RunStateFile{"{}", trained(2)});
  auto future = bytes;
  future[8] = 2;  // first byte of the little-endian version field
  CHECK(decode_error(future) == ErrorKind::VersionMismatch);

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  CHECK(decode_error(flipped) == ErrorKind::CorruptState);

  auto cut = bytes;
  cut.resize(bytes.size() - 20);
  CHECK(decode_error(cut) == ErrorKind::CorruptState);

  auto magic = bytes;
  magic[0] = 'X';
  CHECK(decode_error(magic) == ErrorKind::CorruptState);
  CHECK(decode_error({}) == ErrorKind::CorruptState);
}

TEST_CASE("save and load through the filesystem") {
  const auto path = std::filesystem::temp_directory_path() / "seed_state_io_test.bin";
  const RunStateFile file{"{}", trained(3)};
  save_state(path, file);
  CHECK(same_state(load_state(path).state, file.state));
  std::filesystem::remove(path);
  try {
    load_state(path);
    FAIL("expected Io");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("training 3 tasks, saving, loading and training 3 more equals 6 straight") {
  const TaskStream stream = seed::testing::blob_stream(6, 2, 62);
  for (auto strategy : {SelectionStrategy::KlMax, SelectionStrategy::Random}) {
    const TrainConfig cfg = seed::testing::quick_training(strategy);
    EnsembleState straight = make_ensemble(seed::testing::tiny_net(), 2, 9);
    for (int t = 0; t < 6; ++t) train_task(straight, stream.train[static_cast<std::size_t>(t)], cfg);

    EnsembleState first = make_ensemble(seed::testing::tiny_net(), 2, 9);
    for (int t = 0; t < 3; ++t) train_task(first, stream.train[static_cast<std::size_t>(t)], cfg);
    EnsembleState resumed = decode_state(encode_state(RunStateFile{"{}", first})).state;
    for (int t = 3; t < 6; ++t) train_task(resumed, stream.train[static_cast<std::size_t>(t)], cfg);

    CHECK(same_state(resumed, straight));
  }
}
