#include "dpd/snapshot.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace dpd {

namespace {

constexpr char kMagic[] = "DPDSNAP1";

nlohmann::json network_header(const Network& net) {
    nlohmann::json j;
    j["layer_sizes"] = net.layer_sizes;
    j["hidden"] = net.hidden == HiddenActivation::relu ? "relu" : "tanh";
    j["output"] = net.output == OutputActivation::identity ? "identity" : "bounded";
    if (net.output == OutputActivation::bounded) {
        j["out_low"] = std::vector<double>(net.out_low.data(), net.out_low.data() + net.out_low.size());
        j["out_high"] =
            std::vector<double>(net.out_high.data(), net.out_high.data() + net.out_high.size());
    }
    return j;
}

Network network_from_header(const nlohmann::json& j, const std::vector<double>& values) {
    const std::vector<int> sizes = j.at("layer_sizes").get<std::vector<int>>();
    const HiddenActivation hidden =
        j.at("hidden").get<std::string>() == "relu" ? HiddenActivation::relu : HiddenActivation::tanh;
    const OutputActivation output = j.at("output").get<std::string>() == "identity"
                                        ? OutputActivation::identity
                                        : OutputActivation::bounded;
    Eigen::VectorXd low, high;
    if (output == OutputActivation::bounded) {
        const auto lo = j.at("out_low").get<std::vector<double>>();
        const auto hi = j.at("out_high").get<std::vector<double>>();
        low = Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size());
        high = Eigen::Map<const Eigen::VectorXd>(hi.data(), hi.size());
    }
    Network net(sizes, hidden, output, std::move(low), std::move(high));
    net.unflatten(values);
    return net;
}

}  // namespace

void SnapshotWriter::add_network(const std::string& name, const Network& net) {
    entries_.push_back({name, "network", network_header(net).dump(), net.flatten()});
}

void SnapshotWriter::add_array(const std::string& name, const std::vector<double>& values) {
    entries_.push_back({name, "array", "{}", values});
}

void SnapshotWriter::add_meta(const std::string& key, const std::string& value) {
    meta_[key] = value;
}

void SnapshotWriter::write(const std::string& path) const {
    nlohmann::json header;
    header["version"] = 1;
    header["meta"] = meta_;
    auto& list = header["entries"] = nlohmann::json::array();
    for (const auto& e : entries_) {
        nlohmann::json j = nlohmann::json::parse(e.header_json);
        j["name"] = e.name;
        j["kind"] = e.kind;
        j["count"] = e.values.size();
        list.push_back(std::move(j));
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("snapshot: cannot open for write: " + path);
    out << kMagic << "\n" << header.dump() << "\n";
    for (const auto& e : entries_)
        out.write(reinterpret_cast<const char*>(e.values.data()),
                  static_cast<std::streamsize>(e.values.size() * sizeof(double)));
    if (!out) throw std::runtime_error("snapshot: write failed: " + path);
}

SnapshotReader::SnapshotReader(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("snapshot: cannot open: " + path);
    std::string magic, header_line;
    std::getline(in, magic);
    if (magic != kMagic) throw std::runtime_error("snapshot: bad magic in " + path);
    std::getline(in, header_line);
    const nlohmann::json header = nlohmann::json::parse(header_line);
    if (header.at("version").get<int>() != 1)
        throw std::runtime_error("snapshot: unsupported version in " + path);
    if (header.contains("meta"))
        meta_ = header["meta"].get<std::map<std::string, std::string>>();

    for (const auto& j : header.at("entries")) {
        Entry e;
        e.kind = j.at("kind").get<std::string>();
        e.header_json = j.dump();
        e.values.resize(j.at("count").get<size_t>());
        in.read(reinterpret_cast<char*>(e.values.data()),
                static_cast<std::streamsize>(e.values.size() * sizeof(double)));
        if (!in) throw std::runtime_error("snapshot: truncated payload in " + path);
        entries_[j.at("name").get<std::string>()] = std::move(e);
    }
}

bool SnapshotReader::has(const std::string& name) const { return entries_.count(name) > 0; }

Network SnapshotReader::network(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end() || it->second.kind != "network")
        throw std::runtime_error("snapshot: no network entry named " + name);
    return network_from_header(nlohmann::json::parse(it->second.header_json), it->second.values);
}

std::vector<double> SnapshotReader::array(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end() || it->second.kind != "array")
        throw std::runtime_error("snapshot: no array entry named " + name);
    return it->second.values;
}

std::string SnapshotReader::meta(const std::string& key) const {
    auto it = meta_.find(key);
    return it == meta_.end() ? "" : it->second;
}

void save_network(const Network& net, const std::string& path) {
    SnapshotWriter w;
    w.add_network("net", net);
    w.write(path);
}

Network load_network(const std::string& path) { return SnapshotReader(path).network("net"); }

}  // namespace dpd
