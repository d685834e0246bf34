#include <filesystem>
#include <fstream>

#include "ansfield/checkpoint.hpp"
#include "ansfield/errors.hpp"
#include "doctest.h"

using namespace ansfield;

TEST_CASE("checkpoint round trip is exact") {
    const auto dir = std::filesystem::temp_directory_path() / "ansfield_ckpt_test";
    std::filesystem::remove_all(dir);
    Checkpoint c{DenoiserConfig{}, Denoiser::initialize(DenoiserConfig{}, 21).params(), {{"step", 7}}};
    c.params.get("out.b")[0] = -0.1234567890123;
    save_checkpoint(dir / "model", c);
    const auto back = load_checkpoint(dir / "model");
    CHECK(back.config == c.config);
    CHECK(back.params == c.params);
    CHECK(back.extra["step"] == 7);

    std::ifstream in(checkpoint_bin(dir / "model"), std::ios::binary);
    std::string head(8, '\0');
    in.read(head.data(), 8);
    CHECK(head == "ANSFCKPT");
}

TEST_CASE("corrupt checkpoints are rejected") {
    const auto dir = std::filesystem::temp_directory_path() / "ansfield_ckpt_bad";
    std::filesystem::remove_all(dir);
    Checkpoint c{DenoiserConfig{}, Denoiser::initialize(DenoiserConfig{}, 2).params(), {}};
    save_checkpoint(dir / "m", c);
    std::filesystem::resize_file(checkpoint_bin(dir / "m"), 100);
    CHECK_THROWS_AS(load_checkpoint(dir / "m"), FormatError);
    CHECK_THROWS_AS(load_checkpoint(dir / "absent"), FormatError);

    DenoiserConfig other;
    other.widths = {8, 16, 32};
    Checkpoint mismatched{other, c.params, {}};
    save_checkpoint(dir / "mm", mismatched);
    CHECK_THROWS_AS(load_checkpoint(dir / "mm"), ShapeMismatch);
}
