#include "tan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little, "checkpoint codec assumes a little-endian host");

namespace tanet {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (in.gcount() != 4) throw IoError("checkpoint: truncated file: " + path);
    return v;
}

Tensor scalar_entry(double v) { return Tensor::scalar(static_cast<float>(v)); }

int entry_int(const std::map<std::string, Tensor>& entries, const std::string& name, const std::string& path) {
    auto it = entries.find(name);
    if (it == entries.end()) throw IoError("checkpoint: missing entry '" + name + "' in " + path);
    if (it->second.numel() != 1) throw IoError("checkpoint: entry '" + name + "' is not scalar in " + path);
    return static_cast<int>(std::lround(static_cast<double>(it->second[0])));
}

}  // namespace

void write_checkpoint_entries(const std::string& path, const std::vector<CheckpointEntry>& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("checkpoint: cannot open " + path + " for writing");
    out.write(kCheckpointMagic, 8);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(entries.size()));
    for (const CheckpointEntry& e : entries) {
        put_u32(out, static_cast<std::uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put_u32(out, static_cast<std::uint32_t>(e.tensor.rank()));
        for (int d : e.tensor.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(e.tensor.data()),
                  static_cast<std::streamsize>(e.tensor.numel() * static_cast<std::int64_t>(sizeof(float))));
    }
    if (!out) throw IoError("checkpoint: write failed for " + path);
}

std::vector<CheckpointEntry> read_checkpoint_entries(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open " + path);
    char magic[8] = {};
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw IoError("checkpoint: bad magic in " + path);
    const std::uint32_t version = get_u32(in, path);
    if (version != kCheckpointVersion)
        throw IoError("checkpoint: unsupported version " + std::to_string(version) + " in " + path);
    const std::uint32_t count = get_u32(in, path);

    std::vector<CheckpointEntry> entries;
    entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = get_u32(in, path);
        if (name_len > 4096) throw IoError("checkpoint: implausible name length in " + path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (in.gcount() != static_cast<std::streamsize>(name_len))
            throw IoError("checkpoint: truncated file: " + path);
        const std::uint32_t rank = get_u32(in, path);
        if (rank > 8) throw IoError("checkpoint: implausible rank in " + path);
        std::vector<int> shape(rank);
        std::int64_t numel = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            shape[d] = static_cast<int>(get_u32(in, path));
            if (shape[d] < 1 || numel > (1 << 30)) throw IoError("checkpoint: implausible shape in " + path);
            numel *= shape[d];
        }
        std::vector<float> data(static_cast<std::size_t>(numel));
        in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(numel * 4));
        if (in.gcount() != static_cast<std::streamsize>(numel * 4))
            throw IoError("checkpoint: truncated file: " + path);
        entries.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
    }
    return entries;
}

std::vector<std::pair<std::string, Param*>> model_named_params(TanModelT<float>& model) {
    std::vector<std::pair<std::string, Param*>> out;
    for (auto& [name, p] : model.g1.named_parameters()) out.emplace_back("g1." + name, p);
    for (auto& [name, p] : model.g2.named_parameters()) out.emplace_back("g2." + name, p);
    for (auto& [name, p] : model.d1.named_parameters()) out.emplace_back("d1." + name, p);
    for (auto& [name, p] : model.d2.named_parameters()) out.emplace_back("d2." + name, p);
    return out;
}

namespace {

void append_optimizer_entries(std::vector<CheckpointEntry>& entries, const std::string& prefix,
                              const AdamT<float>& opt, const std::map<const Param*, std::string>& scoped) {
    entries.push_back({prefix + ".step", scalar_entry(static_cast<double>(opt.step_count()))});
    for (std::size_t i = 0; i < opt.params().size(); ++i) {
        const std::string& pname = scoped.at(opt.params()[i]);
        entries.push_back({prefix + ".m." + pname, opt.first_moments()[i]});
        entries.push_back({prefix + ".v." + pname, opt.second_moments()[i]});
    }
}

}  // namespace

void save_checkpoint(const std::string& path, TanModelT<float>& model, const TanOptimizersT<float>* opt) {
    const TransNetConfig& cfg = model.g1.config();
    std::vector<CheckpointEntry> entries;
    entries.push_back({"meta.levels", scalar_entry(cfg.levels)});
    entries.push_back({"meta.in_channels", scalar_entry(cfg.in_channels)});
    entries.push_back({"meta.out_channels", scalar_entry(cfg.out_channels)});
    {
        const std::vector<int> enc = cfg.level_channels();
        Tensor t({static_cast<int>(enc.size())});
        for (std::size_t i = 0; i < enc.size(); ++i) t[static_cast<std::int64_t>(i)] = static_cast<float>(enc[i]);
        entries.push_back({"meta.encoder_channels", std::move(t)});
    }

    std::map<const Param*, std::string> scoped;
    for (auto& [name, p] : model_named_params(model)) {
        entries.push_back({name, p->value});
        scoped[p] = name;
    }
    if (opt) {
        append_optimizer_entries(entries, "opt.g", opt->g, scoped);
        append_optimizer_entries(entries, "opt.d1", opt->d1, scoped);
        append_optimizer_entries(entries, "opt.d2", opt->d2, scoped);
    }
    write_checkpoint_entries(path, entries);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    LoadedCheckpoint out;
    for (CheckpointEntry& e : read_checkpoint_entries(path)) out.entries[e.name] = std::move(e.tensor);

    TransNetConfig cfg;
    cfg.levels = entry_int(out.entries, "meta.levels", path);
    cfg.in_channels = entry_int(out.entries, "meta.in_channels", path);
    cfg.out_channels = entry_int(out.entries, "meta.out_channels", path);
    {
        auto it = out.entries.find("meta.encoder_channels");
        if (it == out.entries.end()) throw IoError("checkpoint: missing entry 'meta.encoder_channels' in " + path);
        cfg.encoder_channels.clear();
        for (std::int64_t i = 0; i < it->second.numel(); ++i)
            cfg.encoder_channels.push_back(static_cast<int>(std::lround(static_cast<double>(it->second[i]))));
    }
    cfg.validate();
    out.config = cfg;

    out.model = std::make_unique<TanModelT<float>>(cfg, 0);

    // the parameter inventory must match the config-implied one exactly
    std::vector<std::string> missing, unexpected;
    std::map<std::string, Param*> expected;
    for (auto& [name, p] : model_named_params(*out.model)) expected[name] = p;
    for (auto& [name, p] : expected) {
        auto it = out.entries.find(name);
        if (it == out.entries.end()) {
            missing.push_back(name);
            continue;
        }
        if (!it->second.same_shape(p->value))
            throw IoError("checkpoint: shape mismatch for '" + name + "' in " + path + ": file has " +
                          it->second.shape_str() + ", config implies " + p->value.shape_str());
        p->value = it->second;
    }
    for (auto& [name, tensor] : out.entries) {
        (void)tensor;
        if (name.rfind("meta.", 0) == 0 || name.rfind("opt.", 0) == 0) continue;
        if (!expected.count(name)) unexpected.push_back(name);
    }
    if (!missing.empty() || !unexpected.empty()) {
        std::string msg = "checkpoint: parameter inventory mismatch in " + path;
        if (!missing.empty()) {
            msg += "; missing:";
            for (const std::string& n : missing) msg += " " + n;
        }
        if (!unexpected.empty()) {
            msg += "; unexpected:";
            for (const std::string& n : unexpected) msg += " " + n;
        }
        throw IoError(msg);
    }
    out.has_optimizer_state = out.entries.count("opt.g.step") > 0;
    return out;
}

namespace {

void restore_one_optimizer(const LoadedCheckpoint& ckpt, const std::string& prefix, AdamT<float>& opt,
                           const std::map<const Param*, std::string>& scoped) {
    auto step_it = ckpt.entries.find(prefix + ".step");
    if (step_it == ckpt.entries.end()) throw IoError("checkpoint: missing optimizer state '" + prefix + ".step'");
    std::vector<Tensor> m, v;
    for (const Param* p : opt.params()) {
        const std::string& pname = scoped.at(p);
        auto mit = ckpt.entries.find(prefix + ".m." + pname);
        auto vit = ckpt.entries.find(prefix + ".v." + pname);
        if (mit == ckpt.entries.end() || vit == ckpt.entries.end())
            throw IoError("checkpoint: missing optimizer moments for '" + pname + "'");
        m.push_back(mit->second);
        v.push_back(vit->second);
    }
    opt.set_state(std::move(m), std::move(v), std::lround(static_cast<double>(step_it->second[0])));
}

}  // namespace

void restore_optimizer_state(const LoadedCheckpoint& ckpt, TanModelT<float>& model, TanOptimizersT<float>& opt) {
    if (!ckpt.has_optimizer_state) throw IoError("checkpoint: no optimizer state stored");
    std::map<const Param*, std::string> scoped;
    for (auto& [name, p] : model_named_params(model)) scoped[p] = name;
    restore_one_optimizer(ckpt, "opt.g", opt.g, scoped);
    restore_one_optimizer(ckpt, "opt.d1", opt.d1, scoped);
    restore_one_optimizer(ckpt, "opt.d2", opt.d2, scoped);
}

}  // namespace tanet
