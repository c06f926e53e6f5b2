#include "msmv/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "msmv/error.hpp"

namespace msmv {

namespace {

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}
    void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
    void bytes(const std::string& s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

private:
    void le(std::uint64_t v, int n) {
        char buf[8];
        for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        out_.write(buf, n);
    }
    std::ostream& out_;
};

class Reader {
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}
    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    double f64() { return std::bit_cast<double>(le(8)); }
    std::string bytes(std::size_t n) {
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        check();
        return s;
    }

private:
    std::uint64_t le(int n) {
        unsigned char buf[8];
        in_.read(reinterpret_cast<char*>(buf), n);
        check();
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        return v;
    }
    void check() {
        if (!in_) fail(Errc::Io, "truncated checkpoint " + source_);
    }
    std::istream& in_;
    std::string source_;
};

void append_store(std::vector<NamedArray>& out, const nn::ParamStore& ps, const std::string& prefix) {
    for (const auto& p : ps) out.push_back({prefix + p.name, p.frozen, p.buffer, p.value});
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::Io, "cannot write checkpoint " + path.string());
    Writer w(out);
    w.bytes(std::string(kCheckpointMagic, std::strlen(kCheckpointMagic)));
    const std::string cfg = serialize(ckpt.config);
    w.u32(static_cast<std::uint32_t>(cfg.size()));
    w.bytes(cfg);
    w.u32(static_cast<std::uint32_t>(ckpt.arrays.size()));
    for (const auto& a : ckpt.arrays) {
        w.u32(static_cast<std::uint32_t>(a.name.size()));
        w.bytes(a.name);
        w.u8(a.frozen ? 1 : 0);
        w.u8(a.buffer ? 1 : 0);
        w.u32(2);
        w.u64(static_cast<std::uint64_t>(a.value.rows()));
        w.u64(static_cast<std::uint64_t>(a.value.cols()));
        for (Eigen::Index i = 0; i < a.value.size(); ++i) w.f64(a.value.data()[i]);
    }
    if (!out) fail(Errc::Io, "failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::Io, "cannot open checkpoint " + path.string());
    Reader r(in, path.string());
    if (r.bytes(std::strlen(kCheckpointMagic)) != kCheckpointMagic) {
        fail(Errc::Io, path.string() + " is not an MSMV1 checkpoint");
    }
    Checkpoint ckpt;
    const std::uint32_t cfg_len = r.u32();
    ckpt.config = parse_config(r.bytes(cfg_len));
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        NamedArray a;
        a.name = r.bytes(r.u32());
        a.frozen = r.u8() != 0;
        a.buffer = r.u8() != 0;
        const std::uint32_t ndim = r.u32();
        if (ndim > 2) fail(Errc::Io, "array " + a.name + " has more than two dimensions");
        std::uint64_t rows = 1;
        std::uint64_t cols = 1;
        if (ndim == 1) cols = r.u64();
        if (ndim == 2) {
            rows = r.u64();
            cols = r.u64();
        }
        if (rows * cols > (std::uint64_t{1} << 32)) fail(Errc::Io, "array " + a.name + " is implausibly large");
        a.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index k = 0; k < a.value.size(); ++k) a.value.data()[k] = r.f64();
        ckpt.arrays.push_back(std::move(a));
    }
    return ckpt;
}

void save_model(const std::filesystem::path& path, const Model& model, const RunConfig& cfg) {
    Checkpoint ckpt;
    ckpt.config = cfg;
    append_store(ckpt.arrays, model.seg.params(), "seg.");
    append_store(ckpt.arrays, model.crop.params(), "crop.");
    append_store(ckpt.arrays, model.head.params(), "head.");
    write_checkpoint(path, ckpt);
}

LoadedModel load_model(const std::filesystem::path& path) {
    Checkpoint ckpt = read_checkpoint(path);
    LoadedModel out;
    out.config = ckpt.config;
    out.config.resolve();
    out.model = Model(out.config.backbone, out.config.fusion, out.config.train.seed);
    out.model.set_freezing(out.config.backbone.unfrozen_top_stages);

    std::size_t expected = out.model.seg.params().size() + out.model.crop.params().size() + out.model.head.params().size();
    if (ckpt.arrays.size() != expected) {
        fail(Errc::ConfigMismatch, "checkpoint holds " + std::to_string(ckpt.arrays.size()) + " arrays, model expects " +
                                       std::to_string(expected));
    }
    for (const auto& a : ckpt.arrays) {
        nn::ParamStore* store = nullptr;
        std::string name;
        for (auto [prefix, ps] : {std::pair<const char*, nn::ParamStore*>{"seg.", &out.model.seg.params()},
                                  {"crop.", &out.model.crop.params()},
                                  {"head.", &out.model.head.params()}}) {
            if (a.name.rfind(prefix, 0) == 0) {
                store = ps;
                name = a.name.substr(std::strlen(prefix));
                break;
            }
        }
        if (store == nullptr || !store->contains(name)) fail(Errc::ConfigMismatch, "unexpected array " + a.name);
        auto& p = store->at(name);
        if (p.value.rows() != a.value.rows() || p.value.cols() != a.value.cols()) {
            fail(Errc::ConfigMismatch, "array " + a.name + " does not match the configured shape");
        }
        p.value = a.value;
        p.frozen = a.frozen;
    }
    return out;
}

int load_backbone_weights(swin::SwinBackbone& backbone, const std::vector<NamedArray>& arrays,
                          const std::string& prefix) {
    int loaded = 0;
    for (const auto& a : arrays) {
        if (a.name.rfind(prefix, 0) != 0) continue;
        const std::string name = a.name.substr(prefix.size());
        if (!backbone.params().contains(name)) continue;
        auto& p = backbone.params().at(name);
        if (p.value.rows() != a.value.rows() || p.value.cols() != a.value.cols()) {
            fail(Errc::ShapeMismatch, "external array " + a.name + " does not match parameter " + name);
        }
        p.value = a.value;
        ++loaded;
    }
    return loaded;
}

}  // namespace msmv
