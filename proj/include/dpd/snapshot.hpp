#pragma once

#include <map>
#include <string>
#include <vector>

#include "dpd/net.hpp"

namespace dpd {

// Checkpoint container: a JSON shape header followed by the row-major
// parameter values of every entry as raw doubles. Networks and flat arrays
// (optimizer moments, counters) live side by side under string names.
//
//   DPDSNAP1\n
//   {"version":1,"entries":[...]}\n
//   <count doubles per entry, concatenated in header order>
class SnapshotWriter {
public:
    void add_network(const std::string& name, const Network& net);
    void add_array(const std::string& name, const std::vector<double>& values);
    void add_meta(const std::string& key, const std::string& value);

    void write(const std::string& path) const;

private:
    struct Entry {
        std::string name;
        std::string kind;  // "network" | "array"
        std::string header_json;
        std::vector<double> values;
    };
    std::vector<Entry> entries_;
    std::map<std::string, std::string> meta_;
};

class SnapshotReader {
public:
    explicit SnapshotReader(const std::string& path);

    bool has(const std::string& name) const;
    Network network(const std::string& name) const;
    std::vector<double> array(const std::string& name) const;
    std::string meta(const std::string& key) const;

private:
    struct Entry {
        std::string kind;
        std::string header_json;
        std::vector<double> values;
    };
    std::map<std::string, Entry> entries_;
    std::map<std::string, std::string> meta_;
};

void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace dpd
