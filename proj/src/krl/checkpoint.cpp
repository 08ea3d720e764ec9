#include "krlab/krl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace krlab::krl {

namespace {

constexpr uint32_t kMagic = 0x4b524c4d;  // "KRLM"
constexpr uint32_t kVersion = 1;
constexpr uint8_t kKindEntity = 0;
constexpr uint8_t kKindRelation = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        require(bool(out_), "cannot open checkpoint for writing: " + path);
    }
    void u8(uint8_t v) { out_.put(char(v)); }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.put(char((v >> (8 * i)) & 0xff));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.put(char((v >> (8 * i)) & 0xff));
    }
    void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
    void vec(const Vec& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void close(const std::string& path) {
        out_.flush();
        require(bool(out_), "checkpoint write failed: " + path);
    }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        require(bool(in_), "cannot open checkpoint: " + path);
    }
    uint8_t u8() { return uint8_t(get()); }
    uint32_t u32() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(get()) << (8 * i);
        return v;
    }
    uint64_t u64() {
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(get()) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    Vec vec() {
        uint64_t n = u64();
        require(n < (1ull << 32), "checkpoint parameter count implausible: " + path_);
        Vec v(n);
        for (double& x : v) x = f64();
        return v;
    }

private:
    std::ifstream in_;
    std::string path_;
    int get() {
        int c = in_.get();
        require(c != std::ifstream::traits_type::eof(), "truncated checkpoint: " + path_);
        return c;
    }
};

}  // namespace

void save_entity_model(const EntityModel& m, const std::string& path) {
    Writer w(path);
    w.u32(kMagic);
    w.u32(kVersion);
    w.u8(kKindEntity);
    const ModelSpec& s = m.spec();
    w.u32(s.dim);
    w.u32(s.depth);
    w.f64(s.alpha);
    w.f64(s.margin);
    w.f64(s.lr);
    w.u32(s.batch);
    w.u32(s.epochs);
    w.u32(s.neg_k);
    w.f64(s.init_scale);
    w.u32(m.n_entities());
    w.u32(m.n_relations());
    w.u64(m.init_seed());
    w.vec(m.params());
    w.close(path);
}

EntityModel load_entity_model(const std::string& path) {
    Reader r(path);
    require(r.u32() == kMagic, "not a model checkpoint: " + path);
    require(r.u32() == kVersion, "unsupported checkpoint version: " + path);
    require(r.u8() == kKindEntity, "checkpoint holds a different model kind: " + path);
    ModelSpec s;
    s.dim = r.u32();
    s.depth = r.u32();
    s.alpha = r.f64();
    s.margin = r.f64();
    s.lr = r.f64();
    s.batch = r.u32();
    s.epochs = r.u32();
    s.neg_k = r.u32();
    s.init_scale = r.f64();
    uint32_t ne = r.u32();
    uint32_t nr = r.u32();
    uint64_t seed = r.u64();
    EntityModel m(s, ne, nr, seed);
    Vec params = r.vec();
    require(params.size() == m.params().size(), "checkpoint parameter size mismatch: " + path);
    m.params() = std::move(params);
    return m;
}

void save_relation_scorer(const RelationScorer& sc, const std::string& path) {
    Writer w(path);
    w.u32(kMagic);
    w.u32(kVersion);
    w.u8(kKindRelation);
    const RelationSpec& s = sc.spec();
    w.u32(s.dim);
    w.u32(s.rounds);
    w.f64(s.lr);
    w.u32(s.batch);
    w.u32(s.epochs);
    w.f64(s.init_scale);
    w.u32(sc.n_entities());
    w.u32(sc.n_relations());
    w.u64(sc.init_seed());
    w.vec(sc.params());
    w.close(path);
}

RelationScorer load_relation_scorer(const std::string& path) {
    Reader r(path);
    require(r.u32() == kMagic, "not a model checkpoint: " + path);
    require(r.u32() == kVersion, "unsupported checkpoint version: " + path);
    require(r.u8() == kKindRelation, "checkpoint holds a different model kind: " + path);
    RelationSpec s;
    s.dim = r.u32();
    s.rounds = r.u32();
    s.lr = r.f64();
    s.batch = r.u32();
    s.epochs = r.u32();
    s.init_scale = r.f64();
    uint32_t ne = r.u32();
    uint32_t nr = r.u32();
    uint64_t seed = r.u64();
    RelationScorer sc(s, ne, nr, seed);
    Vec params = r.vec();
    require(params.size() == sc.params().size(), "checkpoint parameter size mismatch: " + path);
    sc.params() = std::move(params);
    return sc;
}

}  // namespace krlab::krl
