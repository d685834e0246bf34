#include "ansfield/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ansfield/errors.hpp"

namespace ansfield {

namespace {

constexpr char kMagic[8] = {'A', 'N', 'S', 'F', 'C', 'K', 'P', 'T'};

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    std::uint64_t u64() {
        if (pos + 8 > buf.size()) throw FormatError("checkpoint truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    std::string bytes(std::size_t n) {
        if (pos + n > buf.size()) throw FormatError("checkpoint truncated");
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

std::filesystem::path checkpoint_bin(const std::filesystem::path& stem) { return stem.string() + ".bin"; }
std::filesystem::path checkpoint_manifest(const std::filesystem::path& stem) { return stem.string() + ".json"; }

nlohmann::json to_json(const DenoiserConfig& c) {
    return {{"image_channels", c.image_channels},
            {"widths", c.widths},
            {"time_dim", c.time_dim},
            {"text_tokens", c.text_tokens}};
}

DenoiserConfig denoiser_config_from_json(const nlohmann::json& j) {
    DenoiserConfig c;
    c.image_channels = j.value("image_channels", c.image_channels);
    if (j.contains("widths")) c.widths = j.at("widths").get<std::array<int, 3>>();
    c.time_dim = j.value("time_dim", c.time_dim);
    c.text_tokens = j.value("text_tokens", c.text_tokens);
    return c;
}

void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& ckpt) {
    std::string bin(kMagic, sizeof kMagic);
    put_u64(bin, kCheckpointVersion);
    put_u64(bin, ckpt.params.entries().size());
    nlohmann::json arrays = nlohmann::json::array();
    for (const auto& e : ckpt.params.entries()) {
        put_u64(bin, e.name.size());
        bin += e.name;
        put_u64(bin, e.value.rank());
        for (auto d : e.value.shape()) put_u64(bin, d);
        arrays.push_back({{"name", e.name}, {"shape", e.value.shape()}, {"offset", bin.size()}});
        for (double v : e.value.values()) put_u64(bin, std::bit_cast<std::uint64_t>(v));
    }
    if (!stem.parent_path().empty()) std::filesystem::create_directories(stem.parent_path());
    {
        std::ofstream f(checkpoint_bin(stem), std::ios::binary);
        if (!f) throw FormatError("cannot write " + checkpoint_bin(stem).string());
        f.write(bin.data(), static_cast<std::streamsize>(bin.size()));
    }
    nlohmann::json manifest = {{"schema", "ansfield.checkpoint/1"},
                               {"version", kCheckpointVersion},
                               {"binary", checkpoint_bin(stem).filename().string()},
                               {"byte_order", "little"},
                               {"dtype", "f64"},
                               {"config", to_json(ckpt.config)},
                               {"parameter_count", ckpt.params.parameter_count()},
                               {"arrays", arrays},
                               {"extra", ckpt.extra}};
    std::ofstream f(checkpoint_manifest(stem));
    if (!f) throw FormatError("cannot write " + checkpoint_manifest(stem).string());
    f << manifest.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
    std::ifstream mf(checkpoint_manifest(stem));
    if (!mf) throw FormatError("missing checkpoint manifest " + checkpoint_manifest(stem).string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(mf);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad checkpoint manifest: ") + e.what());
    }
    if (manifest.value("version", 0) != kCheckpointVersion) throw FormatError("unsupported checkpoint version");

    std::ifstream bf(checkpoint_bin(stem), std::ios::binary);
    if (!bf) throw FormatError("missing checkpoint binary " + checkpoint_bin(stem).string());
    const std::string buf((std::istreambuf_iterator<char>(bf)), std::istreambuf_iterator<char>());
    Reader r{buf};
    if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw FormatError("bad checkpoint magic");
    if (r.u64() != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
    const auto count = r.u64();
    Checkpoint ckpt;
    ckpt.config = denoiser_config_from_json(manifest.at("config"));
    ckpt.extra = manifest.value("extra", nlohmann::json::object());
    for (std::uint64_t i = 0; i < count; ++i) {
        std::string name = r.bytes(r.u64());
        ValueArray::Shape shape(r.u64());
        for (auto& d : shape) d = r.u64();
        ValueArray value(shape);
        for (auto& v : value.values()) v = std::bit_cast<double>(r.u64());
        ckpt.params.add(std::move(name), std::move(value));
    }
    if (r.pos != buf.size()) throw FormatError("trailing bytes in checkpoint");
    Denoiser(ckpt.config, ckpt.params).validate();
    return ckpt;
}

}  // namespace ansfield
