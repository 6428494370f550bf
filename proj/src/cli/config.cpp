#include "memplan/cli/config.hpp"

#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "memplan/error.hpp"

namespace memplan::cli {
    namespace {
        template <typename T>
        void read(const YAML::Node& node, const char* key, T& field) {
            if (node[key]) {
                field = node[key].as<T>();
            }
        }

        replacement::Policy parse_policy(const std::string& text) {
            if (text == "min") {
                return replacement::Policy::Min;
            }
            if (text == "lru") {
                return replacement::Policy::Lru;
            }
            if (text == "fifo") {
                return replacement::Policy::Fifo;
            }
            throw ConfigError("unknown policy '" + text + "'");
        }

        bytecode::DriverId parse_driver(const std::string& text) {
            if (text == "bitwire") {
                return bytecode::DriverId::BitWire;
            }
            if (text == "batch") {
                return bytecode::DriverId::LeveledBatch;
            }
            throw ConfigError("unknown driver '" + text + "'");
        }

        std::uint64_t parse_limit(const YAML::Node& node) {
            std::string text = node.as<std::string>();
            if (text == "unbounded") {
                return 0;
            }
            return node.as<std::uint64_t>();
        }

        WorkerConfig parse_worker(const YAML::Node& node, const WorkerConfig& base) {
            WorkerConfig w = base;
            if (node["memory_limit"]) {
                w.memory_limit = parse_limit(node["memory_limit"]);
            }
            read(node, "storage_path", w.storage_path);
            read(node, "endpoint", w.endpoint);
            return w;
        }
    }

    std::uint64_t RunConfig::page_bytes() const {
        std::uint64_t units = std::uint64_t(1) << this->page_shift;
        return this->driver == bytecode::DriverId::BitWire ? units * this->bitwire.wire_bytes : units;
    }

    const WorkerConfig& RunConfig::worker(WorkerId id) const {
        if (this->workers.size() == 1) {
            return this->workers[0];
        }
        if (id >= this->workers.size()) {
            throw ConfigError("no configuration for worker " + std::to_string(id) + " (" + std::to_string(this->workers.size())
                              + " configured)");
        }
        return this->workers[id];
    }

    std::uint64_t RunConfig::frames(WorkerId id) const {
        std::uint64_t limit = this->worker(id).memory_limit;
        if (limit == 0) {
            return never;
        }
        std::uint64_t total = limit / this->page_bytes();
        if (total <= this->prefetch_frames) {
            throw ConfigError("memory limit of " + std::to_string(limit) + " bytes holds " + std::to_string(total)
                              + " pages, not enough for " + std::to_string(this->prefetch_frames) + " prefetch frames");
        }
        return total - this->prefetch_frames;
    }

    engine::EngineOptions RunConfig::engine_options() const {
        engine::EngineOptions opts;
        opts.bitwire = this->bitwire;
        opts.batch = this->batch;
        opts.cost = this->cost;
        return opts;
    }

    void RunConfig::validate() const {
        if (this->workers.empty()) {
            throw ConfigError("at least one worker is required");
        }
        if (this->page_shift == 0 || this->page_shift > 40) {
            throw ConfigError("page_shift out of range");
        }
        if (this->lookahead > 0 && this->prefetch_frames == 0) {
            throw ConfigError("lookahead needs prefetch_frames > 0");
        }
        if (this->simulator.latency_s < 0 || this->simulator.bandwidth_bytes_per_s <= 0) {
            throw ConfigError("simulator latency must be >= 0 and bandwidth > 0");
        }
        if (this->driver == bytecode::DriverId::LeveledBatch) {
            this->batch.validate();
            if (this->batch.largest_size() > (std::uint64_t(1) << this->page_shift)) {
                throw ConfigError("largest ciphertext does not fit in a page");
            }
        }
        for (WorkerId w = 0; w != this->workers.size(); w++) {
            this->frames(w);
        }
    }

    RunConfig default_config(bytecode::DriverId driver) {
        RunConfig c;
        c.driver = driver;
        if (driver == bytecode::DriverId::LeveledBatch) {
            c.page_shift = 21;
            c.lookahead = 100;
            c.prefetch_frames = 16;
        }
        return c;
    }

    RunConfig parse_config(const std::string& yaml_text) {
        YAML::Node root;
        try {
            root = YAML::Load(yaml_text);
        } catch (const YAML::Exception& e) {
            throw ConfigError(std::string("bad YAML: ") + e.what());
        }
        try {
            bytecode::DriverId driver = bytecode::DriverId::BitWire;
            if (root["driver"]) {
                driver = parse_driver(root["driver"].as<std::string>());
            }
            RunConfig c = default_config(driver);
            if (root["page_shift"]) {
                c.page_shift = static_cast<PageShift>(root["page_shift"].as<unsigned>());
            }
            read(root, "lookahead", c.lookahead);
            read(root, "prefetch_frames", c.prefetch_frames);
            if (root["policy"]) {
                c.policy = parse_policy(root["policy"].as<std::string>());
            }
            if (const YAML::Node s = root["simulator"]) {
                read(s, "latency", c.simulator.latency_s);
                read(s, "bandwidth", c.simulator.bandwidth_bytes_per_s);
            }
            if (const YAML::Node k = root["cost"]) {
                read(k, "and_gate", c.cost.and_gate);
                read(k, "xor_gate", c.cost.xor_gate);
                read(k, "batch_op", c.cost.batch_op);
                read(k, "copy_per_byte", c.cost.copy_per_byte);
                read(k, "io_wire", c.cost.io_wire);
            }
            if (const YAML::Node b = root["bitwire"]) {
                read(b, "wire_bytes", c.bitwire.wire_bytes);
                read(b, "seed", c.bitwire.seed);
            }
            if (const YAML::Node b = root["batch"]) {
                read(b, "max_level", c.batch.max_level);
                read(b, "dimension", c.batch.dimension);
                read(b, "relin_base", c.batch.relin_base);
                read(b, "unrelin_base", c.batch.unrelin_base);
            }
            WorkerConfig base;
            if (root["memory_limit"]) {
                base.memory_limit = parse_limit(root["memory_limit"]);
            }
            read(root, "storage_path", base.storage_path);
            c.workers = {base};
            if (const YAML::Node ws = root["workers"]) {
                if (!ws.IsSequence() || ws.size() == 0) {
                    throw ConfigError("workers must be a non-empty list");
                }
                c.workers.clear();
                for (const YAML::Node& w : ws) {
                    c.workers.push_back(parse_worker(w, base));
                }
            }
            c.validate();
            return c;
        } catch (const YAML::Exception& e) {
            throw ConfigError(std::string("bad configuration value: ") + e.what());
        }
    }

    RunConfig load_config(const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw IoError("cannot open config " + path);
        }
        std::stringstream text;
        text << in.rdbuf();
        return parse_config(text.str());
    }

    std::string dump_config(const RunConfig& c) {
        YAML::Emitter out;
        out << YAML::BeginMap;
        out << YAML::Key << "driver" << YAML::Value << (c.driver == bytecode::DriverId::BitWire ? "bitwire" : "batch");
        out << YAML::Key << "page_shift" << YAML::Value << static_cast<unsigned>(c.page_shift);
        out << YAML::Key << "lookahead" << YAML::Value << c.lookahead;
        out << YAML::Key << "prefetch_frames" << YAML::Value << c.prefetch_frames;
        out << YAML::Key << "policy" << YAML::Value << std::string(replacement::to_string(c.policy));
        out << YAML::Key << "simulator" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "latency" << YAML::Value << c.simulator.latency_s;
        out << YAML::Key << "bandwidth" << YAML::Value << c.simulator.bandwidth_bytes_per_s;
        out << YAML::EndMap;
        out << YAML::Key << "cost" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "and_gate" << YAML::Value << c.cost.and_gate;
        out << YAML::Key << "xor_gate" << YAML::Value << c.cost.xor_gate;
        out << YAML::Key << "batch_op" << YAML::Value << c.cost.batch_op;
        out << YAML::Key << "copy_per_byte" << YAML::Value << c.cost.copy_per_byte;
        out << YAML::Key << "io_wire" << YAML::Value << c.cost.io_wire;
        out << YAML::EndMap;
        out << YAML::Key << "bitwire" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "wire_bytes" << YAML::Value << c.bitwire.wire_bytes;
        out << YAML::Key << "seed" << YAML::Value << c.bitwire.seed;
        out << YAML::EndMap;
        out << YAML::Key << "batch" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "max_level" << YAML::Value << c.batch.max_level;
        out << YAML::Key << "dimension" << YAML::Value << c.batch.dimension;
        out << YAML::Key << "relin_base" << YAML::Value << c.batch.relin_base;
        out << YAML::Key << "unrelin_base" << YAML::Value << c.batch.unrelin_base;
        out << YAML::EndMap;
        out << YAML::Key << "workers" << YAML::Value << YAML::BeginSeq;
        for (const WorkerConfig& w : c.workers) {
            out << YAML::BeginMap;
            out << YAML::Key << "memory_limit" << YAML::Value << w.memory_limit;
            if (!w.storage_path.empty()) {
                out << YAML::Key << "storage_path" << YAML::Value << w.storage_path;
            }
            if (!w.endpoint.empty()) {
                out << YAML::Key << "endpoint" << YAML::Value << w.endpoint;
            }
            out << YAML::EndMap;
        }
        out << YAML::EndSeq << YAML::EndMap;
        return std::string(out.c_str()) + "\n";
    }
}
