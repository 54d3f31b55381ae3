#include "fasttab/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace fasttab {

using nlohmann::json;

static_assert(sizeof(double) == 8);

namespace {

// Serialize doubles as little-endian regardless of host order.
void to_le(const double* src, size_t n, std::vector<char>& out) {
    out.resize(n * 8);
    std::memcpy(out.data(), src, n * 8);
    if constexpr (std::endian::native == std::endian::big) {
        for (size_t i = 0; i < n; ++i) std::reverse(out.begin() + i * 8, out.begin() + (i + 1) * 8);
    }
}

void from_le(std::vector<char>& buf, double* dst, size_t n) {
    if constexpr (std::endian::native == std::endian::big) {
        for (size_t i = 0; i < n; ++i) std::reverse(buf.begin() + i * 8, buf.begin() + (i + 1) * 8);
    }
    std::memcpy(dst, buf.data(), n * 8);
}

}  // namespace

void save_weights(const std::string& path, const Model& model) {
    json manifest;
    manifest["format_version"] = 1;
    manifest["config"] = json::parse(model.cfg.to_json_string());
    json tensors = json::array();
    uint64_t offset = 0;
    for (const auto& [name, t] : model.params.tensors) {  // std::map: stable order
        tensors.push_back({{"name", name},
                           {"shape", t->shape},
                           {"offset", offset},
                           {"dtype", "f64"}});
        offset += static_cast<uint64_t>(t->numel()) * 8;
    }
    manifest["tensors"] = tensors;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write weights file " + path);
    out << manifest.dump() << "\n";
    std::vector<char> buf;
    for (const auto& [name, t] : model.params.tensors) {
        to_le(t->data.data(), t->data.size(), buf);
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) throw data_error("short write to weights file " + path);
}

Model load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open weights file " + path);
    std::string line;
    if (!std::getline(in, line)) throw data_error("missing manifest in " + path);

    json manifest;
    try {
        manifest = json::parse(line);
    } catch (const std::exception& e) {
        throw data_error(path + ": bad manifest JSON: " + e.what());
    }
    if (manifest.value("format_version", 0) != 1)
        throw data_error(path + ": unsupported weights format version");

    Model m;
    m.cfg = ModelConfig::from_json_string(manifest.at("config").dump());

    uint64_t expect_offset = 0;
    for (const auto& tj : manifest.at("tensors")) {
        const std::string name = tj.at("name").get<std::string>();
        const Shape shape = tj.at("shape").get<Shape>();
        const uint64_t offset = tj.at("offset").get<uint64_t>();
        if (tj.at("dtype").get<std::string>() != "f64")
            throw data_error(path + ": unsupported dtype for tensor " + name);
        if (offset != expect_offset)
            throw data_error(path + ": non-contiguous blob offset for tensor " + name);
        const size_t n = static_cast<size_t>(numel(shape));
        std::vector<char> buf(n * 8);
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() != static_cast<std::streamsize>(buf.size()))
            throw data_error(path + ": truncated blob at tensor " + name);
        auto t = Tensor::zeros(shape, true);
        from_le(buf, t->data.data(), n);
        m.params[name] = t;
        expect_offset += n * 8;
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw data_error(path + ": trailing bytes after tensor blob");
    return m;
}

}  // namespace fasttab
