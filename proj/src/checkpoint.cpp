#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "redolab/network.hpp"

// Checkpoint layout (text, one record per line, space separated):
//
//   redolab-net 1
//   layers <L>
//   layer <idx> <in_dim> <out_dim> <activation> <leaky_slope:hex> <gain:hex> <stream:u64>
//   w <in_dim*out_dim hexfloats, row-major>      (one line per layer)
//   b <out_dim hexfloats>
//   mask <out_dim 0/1 flags>                     (hidden layers only)
//
// Doubles are C hexfloats (%a), which round-trip bit-exactly.

namespace redolab {

namespace {

std::string hexd(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

double parse_hexd(const std::string& tok) {
    return std::strtod(tok.c_str(), nullptr);
}

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "leaky_relu") return Activation::leaky_relu;
    if (name == "identity") return Activation::identity;
    throw std::runtime_error("checkpoint: unknown activation '" + name + "'");
}

}  // namespace

void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_network: cannot open " + path);
    out << "redolab-net 1\n";
    out << "layers " << net.layer_count() << "\n";
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto& s = net.specs[l];
        out << "layer " << l << " " << s.in_dim << " " << s.out_dim << " "
            << activation_name(s.activation) << " " << hexd(s.leaky_slope) << " "
            << hexd(s.init.gain) << " " << s.init.stream << "\n";
        out << "w";
        for (double v : net.weights[l].data) out << " " << hexd(v);
        out << "\nb";
        for (double v : net.biases[l]) out << " " << hexd(v);
        out << "\n";
        if (l + 1 < net.layer_count()) {
            out << "mask";
            for (bool m : net.prune_mask[l]) out << " " << (m ? 1 : 0);
            out << "\n";
        }
    }
    if (!out) throw std::runtime_error("save_network: write failed for " + path);
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_network: cannot open " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "redolab-net" || version != 1)
        throw std::runtime_error("load_network: bad header in " + path);
    std::string key;
    std::size_t nlayers = 0;
    in >> key >> nlayers;
    if (key != "layers") throw std::runtime_error("load_network: expected 'layers'");

    Network net;
    for (std::size_t l = 0; l < nlayers; ++l) {
        std::size_t idx = 0;
        LayerSpec spec;
        std::string act, slope, gain;
        in >> key >> idx >> spec.in_dim >> spec.out_dim >> act >> slope >> gain >>
            spec.init.stream;
        if (key != "layer" || idx != l) throw std::runtime_error("load_network: bad layer record");
        spec.activation = parse_activation(act);
        spec.leaky_slope = parse_hexd(slope);
        spec.init.gain = parse_hexd(gain);
        net.specs.push_back(spec);

        Matrix w(spec.in_dim, spec.out_dim);
        in >> key;
        if (key != "w") throw std::runtime_error("load_network: expected 'w'");
        std::string tok;
        for (double& v : w.data) {
            in >> tok;
            v = parse_hexd(tok);
        }
        net.weights.push_back(std::move(w));

        std::vector<double> b(spec.out_dim);
        in >> key;
        if (key != "b") throw std::runtime_error("load_network: expected 'b'");
        for (double& v : b) {
            in >> tok;
            v = parse_hexd(tok);
        }
        net.biases.push_back(std::move(b));

        if (l + 1 < nlayers) {
            in >> key;
            if (key != "mask") throw std::runtime_error("load_network: expected 'mask'");
            std::vector<bool> mask(spec.out_dim);
            for (std::size_t i = 0; i < mask.size(); ++i) {
                int flag = 0;
                in >> flag;
                mask[i] = flag != 0;
            }
            net.prune_mask.push_back(std::move(mask));
        }
    }
    if (!in) throw std::runtime_error("load_network: truncated file " + path);
    return net;
}

}  // namespace redolab
