// Copyright 2026 The clocklat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CLOCKLAT_CLI_H
#define CLOCKLAT_CLI_H

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "clocklat/cloner.h"
#include "clocklat/errors.h"
#include "clocklat/intlat.h"
#include "json.hpp"

namespace clocklat::cli {

constexpr const char *kSchema = "clocklat/v1";
constexpr const char *kVersion = "0.1.0";
constexpr uint64_t kDefaultSeed = 0x5eed;
constexpr const char *kThreadsEnv = "CLOCKLAT_THREADS";

enum ExitCode : int {
    kOk = 0,
    kOther = 1,
    kValidation = 2,
    kResourceCap = 3,
    kNotConverged = 4,
};

/// Config problem tied to a JSON pointer and the line where it appears.
class ConfigError : public InvalidArgument {
   public:
    ConfigError(const std::string &field, int line, const std::string &message);
    const std::string &field() const {
        return field_;
    }
    int line() const {
        return line_;
    }

   private:
    std::string field_;
    int line_;
};

/// JSON pointer of every key and array element in a JSON text, mapped to the
/// line it starts on.
std::map<std::string, int> locate_lines(const std::string &text);

struct FamilyConfig {
    std::string kind;
    size_t phases = 4;
    size_t d = 2;
    size_t count = 3;
    std::optional<uint64_t> seed;
    cloner::StateFamily explicit_family;
};

struct Params {
    std::optional<uint64_t> n;
    std::optional<double> m;
    std::vector<uint64_t> m_list;
    std::vector<double> succ_grid;
    std::optional<double> eta;
    std::vector<size_t> k_list;
    std::optional<int> r;
    bool gaussian = false;
    bool cloner = true;
    size_t random_probes = 0;
    std::optional<int> cloner_max_iterations;
};

struct Config {
    nlohmann::json document;
    std::map<std::string, int> lines;
    std::optional<std::string> run;
    std::optional<intlat::ClockSpec> clock;
    Params params;
    std::optional<FamilyConfig> family;
    std::optional<std::string> output_path;
    std::optional<std::string> output_format;
    std::optional<uint64_t> seed;
};

Config parse_config(const std::string &text);

using Cell = std::variant<std::monostate, bool, int64_t, uint64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

struct RunOptions {
    uint64_t seed = kDefaultSeed;
    int threads = 1;
};

const std::vector<std::string> &commands();

/// Runs one command on a validated config.
Table run_command(const std::string &command, const Config &config, const RunOptions &options);

void write_csv(const Table &table, std::ostream &out);
void write_json(const Table &table, const std::string &command, const Config &config, const RunOptions &options,
                std::ostream &out);

/// Full command-line entry point; returns the process exit code.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace clocklat::cli

#endif
