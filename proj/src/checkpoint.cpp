#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "forge/surgery.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian");

namespace forge {

namespace {

std::string format_float(float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

}  // namespace

void save_checkpoint(const Model& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write checkpoint " + path);
    const ModelConfig& c = m.config;
    f << "format_version=" << kCheckpointFormatVersion << "\n";
    f << "enc_layers=" << c.enc_layers << "\n";
    f << "dec_layers=" << c.dec_layers << "\n";
    f << "d_model=" << c.d_model << "\n";
    f << "d_ffn=" << c.d_ffn << "\n";
    f << "heads=" << c.heads << "\n";
    f << "src_vocab=" << c.src_vocab << "\n";
    f << "tgt_vocab=" << c.tgt_vocab << "\n";
    f << "max_positions=" << c.max_positions << "\n";
    f << "dropout=" << format_float(c.dropout) << "\n";
    f << "tie_decoder_embeddings=" << (c.tie_decoder_embeddings ? 1 : 0) << "\n";
    f << "lang_src=" << m.src_lang << "\n";
    f << "lang_tgt=" << m.tgt_lang << "\n";
    f << "vocab_fp_src=" << m.src_vocab_fp << "\n";
    f << "vocab_fp_tgt=" << m.tgt_vocab_fp << "\n";
    f << "\n";
    for (const auto& [name, p] : m.tree.named) {  // std::map: already sorted
        f << name << "\n";
        const auto& dims = p->value.dims;
        for (size_t i = 0; i < dims.size(); ++i) f << (i ? " " : "") << dims[i];
        f << "\n";
        f.write(reinterpret_cast<const char*>(p->value.data()),
                static_cast<std::streamsize>(p->value.numel() * sizeof(float)));
        f << "\n";
    }
    if (!f) throw std::runtime_error("write failure on checkpoint " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read checkpoint " + path);
    Model m;
    ModelConfig& c = m.config;
    std::string line;
    bool saw_version = false;
    while (std::getline(f, line)) {
        if (line.empty()) break;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CheckpointInconsistentError("malformed header line: " + line);
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "format_version") {
            saw_version = true;
            if (std::stoi(val) != kCheckpointFormatVersion)
                throw CheckpointVersionError("unsupported checkpoint format_version " + val);
        } else if (key == "enc_layers") c.enc_layers = std::stoi(val);
        else if (key == "dec_layers") c.dec_layers = std::stoi(val);
        else if (key == "d_model") c.d_model = std::stoi(val);
        else if (key == "d_ffn") c.d_ffn = std::stoi(val);
        else if (key == "heads") c.heads = std::stoi(val);
        else if (key == "src_vocab") c.src_vocab = std::stoi(val);
        else if (key == "tgt_vocab") c.tgt_vocab = std::stoi(val);
        else if (key == "max_positions") c.max_positions = std::stoi(val);
        else if (key == "dropout") c.dropout = std::stof(val);
        else if (key == "tie_decoder_embeddings") c.tie_decoder_embeddings = val == "1";
        else if (key == "lang_src") m.src_lang = val;
        else if (key == "lang_tgt") m.tgt_lang = val;
        else if (key == "vocab_fp_src") m.src_vocab_fp = val;
        else if (key == "vocab_fp_tgt") m.tgt_vocab_fp = val;
        else throw CheckpointInconsistentError("unknown header key: " + key);
    }
    if (!saw_version) throw CheckpointVersionError("checkpoint missing format_version");
    try {
        c.validate();
    } catch (const std::exception& e) {
        throw CheckpointInconsistentError(std::string("invalid config in header: ") + e.what());
    }

    std::vector<std::string> expected = canonical_names(c);
    size_t next = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const std::string name = line;
        if (next >= expected.size())
            throw CheckpointInconsistentError("unexpected extra tensor: " + name);
        if (name != expected[next])
            throw CheckpointInconsistentError("tensor out of order or unknown: " + name +
                                              " (expected " + expected[next] + ")");
        ++next;
        if (!std::getline(f, line)) throw CheckpointTruncatedError("truncated dims for " + name);
        std::istringstream ds(line);
        std::vector<int> dims;
        int d;
        while (ds >> d) dims.push_back(d);
        if (dims != canonical_dims(c, name))
            throw CheckpointInconsistentError("dims inconsistent with config for tensor " + name);
        Tens<float> t(dims);
        f.read(reinterpret_cast<char*>(t.data()),
               static_cast<std::streamsize>(t.numel() * sizeof(float)));
        if (static_cast<size_t>(f.gcount()) != t.numel() * sizeof(float))
            throw CheckpointTruncatedError("truncated payload in tensor " + name);
        int nl = f.get();
        if (nl != '\n') throw CheckpointTruncatedError("missing record terminator after " + name);
        m.tree.named.emplace(name, std::make_shared<Param<float>>(std::move(t)));
    }
    if (next != expected.size())
        throw CheckpointTruncatedError("missing tensors: checkpoint ends after " +
                                       std::to_string(next) + " of " +
                                       std::to_string(expected.size()));
    return m;
}

}  // namespace forge
