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

#include "clocklat/cli.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "clocklat/dist.h"
#include "clocklat/fidelity.h"
#include "clocklat/filteropt.h"

namespace clocklat::cli {

using nlohmann::json;

namespace {

std::string join_path(const std::string &parent, const std::string &child) {
    return parent + "/" + child;
}

class Reader {
   public:
    explicit Reader(const std::map<std::string, int> &lines) : lines_(lines) {}

    int line_for(std::string path) const {
        while (true) {
            auto it = lines_.find(path);
            if (it != lines_.end()) {
                return it->second;
            }
            auto cut = path.rfind('/');
            if (cut == std::string::npos || path.empty()) {
                return 1;
            }
            path = path.substr(0, cut);
        }
    }

    [[noreturn]] void fail(const std::string &path, const std::string &message) const {
        throw ConfigError(path.empty() ? "/" : path, line_for(path), message);
    }

    void check_keys(const json &obj, const std::string &path, const std::set<std::string> &allowed) const {
        if (!obj.is_object()) {
            fail(path, "expected an object");
        }
        for (const auto &[key, value] : obj.items()) {
            if (!allowed.count(key)) {
                std::string known;
                for (const auto &a : allowed) {
                    known += (known.empty() ? "" : ", ") + a;
                }
                fail(join_path(path, key), "unknown key '" + key + "' (allowed: " + known + ")");
            }
        }
    }

    double real(const json &j, const std::string &path) const {
        if (!j.is_number()) {
            fail(path, "expected a number");
        }
        double v = j.get<double>();
        if (!std::isfinite(v)) {
            fail(path, "expected a finite number");
        }
        return v;
    }

    uint64_t natural(const json &j, const std::string &path) const {
        if (j.is_number_unsigned()) {
            return j.get<uint64_t>();
        }
        if (j.is_number_integer()) {
            fail(path, "expected a nonnegative integer");
        }
        double v = real(j, path);
        if (v < 0 || v != std::floor(v) || v > 9007199254740992.0) {
            fail(path, "expected a nonnegative integer");
        }
        return static_cast<uint64_t>(v);
    }

    int64_t integer(const json &j, const std::string &path) const {
        if (j.is_number_integer()) {
            return j.get<int64_t>();
        }
        double v = real(j, path);
        if (v != std::floor(v) || std::abs(v) > 9007199254740992.0) {
            fail(path, "expected an integer");
        }
        return static_cast<int64_t>(v);
    }

    bool boolean(const json &j, const std::string &path) const {
        if (!j.is_boolean()) {
            fail(path, "expected true or false");
        }
        return j.get<bool>();
    }

    std::string string(const json &j, const std::string &path) const {
        if (!j.is_string()) {
            fail(path, "expected a string");
        }
        return j.get<std::string>();
    }

    const json &array(const json &j, const std::string &path) const {
        if (!j.is_array()) {
            fail(path, "expected an array");
        }
        return j;
    }

    std::vector<double> reals(const json &j, const std::string &path) const {
        std::vector<double> out;
        for (size_t i = 0; i < array(j, path).size(); i++) {
            out.push_back(real(j[i], join_path(path, std::to_string(i))));
        }
        return out;
    }

    std::vector<uint64_t> naturals(const json &j, const std::string &path) const {
        std::vector<uint64_t> out;
        for (size_t i = 0; i < array(j, path).size(); i++) {
            out.push_back(natural(j[i], join_path(path, std::to_string(i))));
        }
        return out;
    }

    cloner::Complex amplitude(const json &j, const std::string &path) const {
        if (j.is_array()) {
            if (j.size() != 2) {
                fail(path, "complex amplitudes are written as [re, im]");
            }
            return {real(j[0], join_path(path, "0")), real(j[1], join_path(path, "1"))};
        }
        return real(j, path);
    }

   private:
    const std::map<std::string, int> &lines_;
};

std::string clock_field(const std::string &message) {
    for (const char *field : {"probs", "units", "K"}) {
        if (message.rfind(field, 0) == 0) {
            return std::string("/clock/") + field;
        }
    }
    if (message.find("row") != std::string::npos || message.find("rank") != std::string::npos) {
        return "/clock/K";
    }
    return "/clock";
}

intlat::ClockSpec read_clock(const Reader &rd, const json &j) {
    rd.check_keys(j, "/clock", {"units", "K", "probs"});
    intlat::ClockSpec spec;
    for (const char *key : {"units", "K", "probs"}) {
        if (!j.contains(key)) {
            rd.fail("/clock", std::string("missing required key '") + key + "'");
        }
    }
    spec.units = rd.reals(j["units"], "/clock/units");
    spec.probs = rd.reals(j["probs"], "/clock/probs");
    const auto &rows = rd.array(j["K"], "/clock/K");
    for (size_t l = 0; l < rows.size(); l++) {
        std::string row_path = "/clock/K/" + std::to_string(l);
        std::vector<int64_t> row;
        for (size_t c = 0; c < rd.array(rows[l], row_path).size(); c++) {
            row.push_back(rd.integer(rows[l][c], join_path(row_path, std::to_string(c))));
        }
        spec.K.push_back(std::move(row));
    }
    try {
        intlat::ClockModel model(spec);
    } catch (const InvalidArgument &e) {
        rd.fail(clock_field(e.what()), e.what());
    }
    return spec;
}

FamilyConfig read_family(const Reader &rd, const json &j) {
    rd.check_keys(j, "/family", {"kind", "phases", "d", "count", "seed", "states", "priors"});
    FamilyConfig f;
    if (!j.contains("kind")) {
        rd.fail("/family", "missing required key 'kind'");
    }
    f.kind = rd.string(j["kind"], "/family/kind");
    static const std::set<std::string> kinds = {"equatorial", "tetrahedral", "random", "explicit"};
    if (!kinds.count(f.kind)) {
        rd.fail("/family/kind", "unknown family kind '" + f.kind + "' (equatorial, tetrahedral, random, explicit)");
    }
    if (j.contains("phases")) {
        f.phases = rd.natural(j["phases"], "/family/phases");
    }
    if (j.contains("d")) {
        f.d = rd.natural(j["d"], "/family/d");
    }
    if (j.contains("count")) {
        f.count = rd.natural(j["count"], "/family/count");
    }
    if (j.contains("seed")) {
        f.seed = rd.natural(j["seed"], "/family/seed");
    }
    if (f.kind == "explicit") {
        if (!j.contains("states")) {
            rd.fail("/family", "explicit family needs 'states'");
        }
        const auto &states = rd.array(j["states"], "/family/states");
        auto &fam = f.explicit_family;
        for (size_t x = 0; x < states.size(); x++) {
            std::string path = "/family/states/" + std::to_string(x);
            const auto &amps = rd.array(states[x], path);
            cloner::Vector psi(amps.size());
            for (size_t i = 0; i < amps.size(); i++) {
                psi[i] = rd.amplitude(amps[i], join_path(path, std::to_string(i)));
            }
            fam.states.push_back(psi);
        }
        fam.d = fam.states.empty() ? 0 : fam.states[0].size();
        if (j.contains("priors")) {
            fam.priors = rd.reals(j["priors"], "/family/priors");
        } else {
            fam.priors.assign(fam.states.size(), 1.0 / std::max<size_t>(1, fam.states.size()));
        }
        try {
            fam.validate();
        } catch (const InvalidArgument &e) {
            rd.fail("/family/states", e.what());
        }
    } else if (j.contains("states") || j.contains("priors")) {
        rd.fail(j.contains("states") ? "/family/states" : "/family/priors",
                "states and priors are only read for the explicit family kind");
    }
    return f;
}

Params read_params(const Reader &rd, const json &j) {
    rd.check_keys(j, "/params",
                  {"n", "m", "mList", "targetSucc", "succGrid", "eta", "k", "kList", "r", "gaussian", "cloner",
                   "randomProbes", "clonerMaxIterations"});
    Params p;
    if (j.contains("n")) {
        p.n = rd.natural(j["n"], "/params/n");
    }
    if (j.contains("m")) {
        p.m = rd.real(j["m"], "/params/m");
        if (!(*p.m > 0)) {
            rd.fail("/params/m", "m must be positive");
        }
    }
    if (j.contains("mList")) {
        p.m_list = rd.naturals(j["mList"], "/params/mList");
        for (size_t i = 0; i < p.m_list.size(); i++) {
            std::string path = "/params/mList/" + std::to_string(i);
            if (p.m_list[i] == 0) {
                rd.fail(path, "copy numbers must be positive");
            }
            if (i > 0 && p.m_list[i] <= p.m_list[i - 1]) {
                rd.fail(path, "mList must be strictly ascending");
            }
        }
    }
    if (j.contains("targetSucc") && j.contains("succGrid")) {
        rd.fail("/params/succGrid", "give either targetSucc or succGrid, not both");
    }
    if (j.contains("targetSucc")) {
        p.succ_grid = {rd.real(j["targetSucc"], "/params/targetSucc")};
    }
    if (j.contains("succGrid")) {
        p.succ_grid = rd.reals(j["succGrid"], "/params/succGrid");
    }
    std::string succ_path = j.contains("succGrid") ? "/params/succGrid" : "/params/targetSucc";
    for (size_t i = 0; i < p.succ_grid.size(); i++) {
        if (!(p.succ_grid[i] > 0 && p.succ_grid[i] <= 1)) {
            rd.fail(j.contains("succGrid") ? succ_path + "/" + std::to_string(i) : succ_path,
                    "success probabilities must lie in (0, 1]");
        }
    }
    if (j.contains("eta")) {
        p.eta = rd.real(j["eta"], "/params/eta");
    }
    if (j.contains("k") && j.contains("kList")) {
        rd.fail("/params/kList", "give either k or kList, not both");
    }
    if (j.contains("k")) {
        p.k_list = {rd.natural(j["k"], "/params/k")};
    }
    if (j.contains("kList")) {
        auto ks = rd.naturals(j["kList"], "/params/kList");
        p.k_list.assign(ks.begin(), ks.end());
    }
    if (j.contains("r")) {
        int64_t r = rd.integer(j["r"], "/params/r");
        if (r < 1 || r > static_cast<int64_t>(intlat::kMaxRank)) {
            rd.fail("/params/r", "r must lie in [1, " + std::to_string(intlat::kMaxRank) + "]");
        }
        p.r = static_cast<int>(r);
    }
    if (j.contains("gaussian")) {
        p.gaussian = rd.boolean(j["gaussian"], "/params/gaussian");
    }
    if (j.contains("cloner")) {
        p.cloner = rd.boolean(j["cloner"], "/params/cloner");
    }
    if (j.contains("randomProbes")) {
        p.random_probes = rd.natural(j["randomProbes"], "/params/randomProbes");
    }
    if (j.contains("clonerMaxIterations")) {
        uint64_t it = rd.natural(j["clonerMaxIterations"], "/params/clonerMaxIterations");
        if (it < 1 || it > 100000000) {
            rd.fail("/params/clonerMaxIterations", "clonerMaxIterations must lie in [1, 1e8]");
        }
        p.cloner_max_iterations = static_cast<int>(it);
    }
    return p;
}

template <typename T>
const T &require(const std::optional<T> &v, const Config &config, const std::string &path, const std::string &what) {
    if (!v) {
        throw ConfigError(path, Reader(config.lines).line_for(path), "missing required parameter " + what);
    }
    return *v;
}

[[noreturn]] void missing(const Config &config, const std::string &path, const std::string &what) {
    throw ConfigError(path, Reader(config.lines).line_for(path), "missing required parameter " + what);
}

/// Runs body(i) for i in [0, count) on up to `threads` threads. Errors are
/// rethrown in index order so the reported failure does not depend on timing.
template <typename F>
void parallel_for(size_t count, int threads, F &&body) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    size_t extra = std::min<size_t>(count, std::max(1, threads)) - (count > 0 ? 1 : 0);
    std::vector<std::thread> pool;
    for (size_t t = 0; t < extra; t++) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto &t : pool) {
        t.join();
    }
    for (auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::string join_warnings(const std::vector<std::string> &warnings) {
    std::string out;
    std::set<std::string> seen;
    for (const auto &w : warnings) {
        if (seen.insert(w).second) {
            out += (out.empty() ? "" : "; ") + w;
        }
    }
    return out;
}

const intlat::ClockSpec &require_clock(const Config &config) {
    if (!config.clock) {
        throw ConfigError("/clock", 1, "this command needs a 'clock' block");
    }
    return *config.clock;
}

Table cmd_spectrum(const Config &config) {
    intlat::ClockModel model(require_clock(config));
    uint64_t n = require(config.params.n, config, "/params/n", "n");
    Table t{{kSchema, "key", "value"}, {}};
    auto add = [&](const std::string &key, Cell value) { t.rows.push_back({std::string("spectrum"), key, value}); };
    const auto &smith = model.smith();
    std::string diag;
    for (auto a : smith.A) {
        diag += (diag.empty() ? "" : " ") + std::to_string(a);
    }
    add("rank", static_cast<uint64_t>(model.rank()));
    add("levels", static_cast<uint64_t>(model.levels()));
    add("unit_cell_volume", static_cast<int64_t>(model.unit_cell_volume()));
    add("smith_diagonal", diag);
    auto units = model.smith_units();
    for (size_t l = 0; l < units.size(); l++) {
        add("smith_units[" + std::to_string(l) + "]", units[l]);
    }
    add("n", n);
    add("lattice_size", intlat::lattice_size(model, n));
    auto mo = intlat::moments(model, static_cast<double>(n));
    for (Eigen::Index i = 0; i < mo.mean.size(); i++) {
        add("mean[" + std::to_string(i) + "]", mo.mean[i]);
    }
    for (Eigen::Index i = 0; i < mo.cov.rows(); i++) {
        for (Eigen::Index j = 0; j < mo.cov.cols(); j++) {
            add("cov[" + std::to_string(i) + "][" + std::to_string(j) + "]", mo.cov(i, j));
        }
    }
    for (Eigen::Index i = 0; i < mo.smith_mean.size(); i++) {
        add("smith_mean[" + std::to_string(i) + "]", mo.smith_mean[i]);
    }
    for (Eigen::Index i = 0; i < mo.smith_cov.rows(); i++) {
        for (Eigen::Index j = 0; j < mo.smith_cov.cols(); j++) {
            add("smith_cov[" + std::to_string(i) + "][" + std::to_string(j) + "]", mo.smith_cov(i, j));
        }
    }
    add("invariance_quantity", intlat::invariance_quantity(model, static_cast<double>(n)));
    return t;
}

Table cmd_dist(const Config &config) {
    intlat::ClockModel model(require_clock(config));
    uint64_t n = require(config.params.n, config, "/params/n", "n");
    auto d = dist::exact_distribution(model, n);
    Table t;
    t.columns = {kSchema};
    for (size_t l = 0; l < model.rank(); l++) {
        t.columns.push_back("s" + std::to_string(l));
    }
    t.columns.insert(t.columns.end(), {"mass", "log_mass"});
    if (config.params.gaussian) {
        t.columns.push_back("gaussian");
    }
    t.columns.push_back("discarded_mass");
    for (size_t i = 0; i < d.size(); i++) {
        std::vector<Cell> row = {std::string("dist")};
        for (size_t l = 0; l < model.rank(); l++) {
            row.push_back(static_cast<int64_t>(d.points()[i][l]));
        }
        row.push_back(d.mass_at(i));
        row.push_back(d.log_masses()[i]);
        if (config.params.gaussian) {
            row.push_back(n == 0 ? Cell{} : Cell{dist::gaussian_mass(model, static_cast<double>(n), d.points()[i])});
        }
        row.push_back(d.discarded_mass());
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table cmd_fidelity(const Config &config, const RunOptions &options) {
    intlat::ClockModel model(require_clock(config));
    uint64_t n = require(config.params.n, config, "/params/n", "n");
    const auto &m_list = config.params.m_list;
    if (m_list.empty()) {
        missing(config, "/params/mList", "mList");
    }
    auto input = dist::exact_distribution(model, n);
    auto filter = fidelity::Filter::trivial(input);
    fidelity::SandwichOptions sandwich;
    sandwich.eta = config.params.eta.value_or(0.5);
    sandwich.run_cloner = config.params.cloner;
    sandwich.cloner.seed = options.seed;
    if (config.params.cloner_max_iterations) {
        sandwich.cloner.max_iterations = *config.params.cloner_max_iterations;
    }

    std::vector<fidelity::SandwichRow> rows(m_list.size());
    parallel_for(m_list.size(), options.threads, [&](size_t i) {
        rows[i] = fidelity::sandwich_experiment(model, filter, {m_list[i]}, sandwich).rows.at(0);
    });
    bool monotone = true;
    for (size_t i = 1; i < rows.size(); i++) {
        monotone = monotone && rows[i].gap_pm <= rows[i - 1].gap_pm && rows[i].gap_bound <= rows[i - 1].gap_bound;
        if (rows[i].gap_cl && rows[i - 1].gap_cl) {
            monotone = monotone && *rows[i].gap_cl <= *rows[i - 1].gap_cl;
        }
    }

    Table t{{kSchema, "m", "succ", "F_pm", "method_pm", "F_cloner", "method_cloner", "F_bound", "method_bound",
             "F_asymptotic", "method_asymptotic", "gap_pm", "gap_cloner", "gap_bound", "bound_vacuous",
             "truncation_pm", "truncation_cloner", "cloner_residual", "cloner_iterations", "gaps_non_increasing",
             "warnings"},
            {}};
    for (const auto &r : rows) {
        std::vector<std::string> warnings = r.pm.warnings;
        warnings.insert(warnings.end(), r.bound.warnings.begin(), r.bound.warnings.end());
        warnings.insert(warnings.end(), r.asymptotic.warnings.begin(), r.asymptotic.warnings.end());
        std::vector<Cell> row = {std::string("fidelity"), r.m, filter.success(), r.pm.value,
                                 std::string(fidelity::method_name(r.pm.method))};
        if (r.cl) {
            row.push_back(r.cl->fidelity);
            row.push_back(std::string(fidelity::method_name(fidelity::Method::ExactCL)));
        } else {
            row.insert(row.end(), {Cell{}, Cell{}});
        }
        row.insert(row.end(), {r.bound.value, std::string(fidelity::method_name(r.bound.method)), r.asymptotic.value,
                               std::string(fidelity::method_name(r.asymptotic.method)), r.gap_pm});
        row.push_back(r.gap_cl ? Cell{*r.gap_cl} : Cell{});
        row.insert(row.end(), {r.gap_bound, r.bound.vacuous, r.pm.truncation_bound});
        if (r.cl) {
            row.insert(row.end(), {r.cl->truncation_bound, r.cl->residual, static_cast<int64_t>(r.cl->iterations)});
        } else {
            row.insert(row.end(), {Cell{}, Cell{}, Cell{}});
        }
        row.push_back(monotone);
        row.push_back(join_warnings(warnings));
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table cmd_tradeoff(const Config &config, const RunOptions &options) {
    const auto &p = config.params;
    uint64_t n = require(p.n, config, "/params/n", "n");
    double m = require(p.m, config, "/params/m", "m");
    if (p.succ_grid.empty()) {
        missing(config, "/params/succGrid", "succGrid or targetSucc");
    }
    std::optional<intlat::ClockModel> model;
    std::optional<dist::EnergyDistribution> input;
    int r = 0;
    if (config.clock) {
        model.emplace(*config.clock);
        r = static_cast<int>(model->rank());
        if (p.r && *p.r != r) {
            throw ConfigError("/params/r", Reader(config.lines).line_for("/params/r"),
                              "r = " + std::to_string(*p.r) + " contradicts the clock, which has " +
                                  std::to_string(r) + " energy units");
        }
        if (r == 0) {
            throw ConfigError("/clock", Reader(config.lines).line_for("/clock"),
                              "the trade-off needs at least one energy unit");
        }
        input = dist::exact_distribution(*model, n);
    } else {
        r = require(p.r, config, "/params/r", "r (or a clock block)");
    }
    if (n == 0) {
        throw ConfigError("/params/n", Reader(config.lines).line_for("/params/n"), "n must be positive");
    }

    std::optional<filteropt::TradeoffPoint> low;
    if (model) {
        low = filteropt::low_success_fidelity(*model, n, m);
    }
    struct Row {
        filteropt::TradeoffPoint param;
        std::optional<filteropt::TradeoffPoint> exact;
        std::optional<filteropt::TradeoffPoint> high;
    };
    std::vector<Row> rows(p.succ_grid.size());
    parallel_for(rows.size(), options.threads, [&](size_t i) {
        double succ = p.succ_grid[i];
        rows[i].param = filteropt::tradeoff_at_succ(r, static_cast<double>(n), m, succ);
        if (model) {
            rows[i].exact = filteropt::optimal_fidelity_exact(*model, *input, m, succ);
        }
        if (1 - succ <= 0.2) {
            rows[i].high = filteropt::high_succ_expansion(r, static_cast<double>(n), m, 1 - succ);
        }
    });

    Table t{{kSchema, "succ", "alpha", "F_parametric", "F_exact", "F_low_succ", "F_high_succ", "flat_regime", "methods",
             "warnings"},
            {}};
    for (size_t i = 0; i < rows.size(); i++) {
        const auto &row = rows[i];
        std::vector<std::string> methods = {filteropt::method_name(row.param.method)};
        std::vector<std::string> warnings = row.param.warnings;
        std::vector<Cell> cells = {std::string("tradeoff"), p.succ_grid[i], row.param.alpha.value_or(0.0),
                                   row.param.fidelity};
        bool flat = row.exact && row.exact->flat_regime;
        if (row.exact) {
            cells.push_back(row.exact->fidelity);
            methods.push_back(filteropt::method_name(row.exact->method));
            warnings.insert(warnings.end(), row.exact->warnings.begin(), row.exact->warnings.end());
        } else {
            cells.push_back(Cell{});
        }
        if (flat && low) {
            cells.push_back(low->fidelity);
            methods.push_back(filteropt::method_name(low->method));
        } else {
            cells.push_back(Cell{});
        }
        if (row.high) {
            cells.push_back(row.high->fidelity);
            methods.push_back(filteropt::method_name(row.high->method));
        } else {
            cells.push_back(Cell{});
        }
        cells.push_back(row.exact ? Cell{flat} : Cell{});
        std::string tags;
        for (const auto &mt : methods) {
            tags += (tags.empty() ? "" : ";") + mt;
        }
        cells.push_back(tags);
        cells.push_back(join_warnings(warnings));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

cloner::StateFamily build_family(const FamilyConfig &f, uint64_t seed) {
    if (f.kind == "equatorial") {
        return cloner::equatorial_family(f.phases);
    }
    if (f.kind == "tetrahedral") {
        return cloner::tetrahedral_family();
    }
    if (f.kind == "random") {
        return cloner::random_family(f.d, f.count, f.seed.value_or(seed));
    }
    return f.explicit_family;
}

Table cmd_cloner_check(const Config &config, const RunOptions &options) {
    if (!config.family) {
        throw ConfigError("/family", 1, "this command needs a 'family' block");
    }
    const auto &p = config.params;
    uint64_t n = p.n.value_or(1);
    if (p.m_list.empty()) {
        missing(config, "/params/mList", "mList");
    }
    std::vector<size_t> k_list = p.k_list.empty() ? std::vector<size_t>{1} : p.k_list;
    for (size_t k : k_list) {
        if (k > p.m_list.front()) {
            std::string path = p.k_list.size() == 1 && !config.document["params"].contains("kList") ? "/params/k"
                                                                                                     : "/params/kList";
            throw ConfigError(path, Reader(config.lines).line_for(path),
                              "k = " + std::to_string(k) + " exceeds the smallest m");
        }
    }
    auto family = build_family(*config.family, options.seed);

    cloner::SymmetricSpace in(family.d, n);
    std::vector<cloner::Matrix> probes;
    std::vector<std::string> labels;
    for (size_t x = 0; x < family.states.size(); x++) {
        probes.push_back(cloner::projector(in.product_power(family.states[x])));
        labels.push_back("state" + std::to_string(x));
    }
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal;
    for (size_t j = 0; j < p.random_probes; j++) {
        cloner::Vector v(in.dim());
        for (Eigen::Index i = 0; i < v.size(); i++) {
            v[i] = cloner::Complex(normal(rng), normal(rng));
        }
        probes.push_back(cloner::projector(v / v.norm()));
        labels.push_back("random" + std::to_string(j));
    }

    struct GridCell {
        size_t m, k;
        cloner::OptimalCloner cl;
        cloner::GapReport report;
    };
    std::vector<GridCell> grid;
    for (size_t m : p.m_list) {
        for (size_t k : k_list) {
            grid.push_back({m, k, {}, {}});
        }
    }
    parallel_for(grid.size(), options.threads, [&](size_t i) {
        grid[i].cl = cloner::optimal_cloner(family, n, grid[i].m, grid[i].k);
        grid[i].report = cloner::definetti_gap(grid[i].cl.choi, probes, grid[i].k);
    });

    Table t{{kSchema, "m", "k", "probe", "F_star", "P_star", "degenerate", "success", "gap", "gap_bound", "p_err",
             "p_err_bound", "pass", "methods"},
            {}};
    for (const auto &g : grid) {
        for (size_t i = 0; i < g.report.rows.size(); i++) {
            const auto &row = g.report.rows[i];
            bool pass = row.gap <= row.gap_bound + 1e-10 && row.p_err <= row.p_err_bound + 1e-10;
            t.rows.push_back({std::string("cloner-check"), static_cast<uint64_t>(g.m), static_cast<uint64_t>(g.k),
                              labels[i], g.cl.fidelity, g.cl.success, g.cl.degenerate, row.success, row.gap,
                              row.gap_bound, row.p_err, row.p_err_bound, pass,
                              std::string("optimal-cloner;measure-and-prepare")});
        }
    }
    return t;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

std::string csv_cell(const Cell &cell) {
    struct Visitor {
        std::string operator()(std::monostate) const {
            return "";
        }
        std::string operator()(bool b) const {
            return b ? "true" : "false";
        }
        std::string operator()(int64_t v) const {
            return std::to_string(v);
        }
        std::string operator()(uint64_t v) const {
            return std::to_string(v);
        }
        std::string operator()(double v) const {
            return format_double(v);
        }
        std::string operator()(const std::string &s) const {
            if (s.find_first_of(",\"\n\r") == std::string::npos) {
                return s;
            }
            std::string out = "\"";
            for (char c : s) {
                out += c == '"' ? std::string("\"\"") : std::string(1, c);
            }
            return out + "\"";
        }
    };
    return std::visit(Visitor{}, cell);
}

nlohmann::ordered_json json_cell(const Cell &cell) {
    struct Visitor {
        nlohmann::ordered_json operator()(std::monostate) const {
            return nullptr;
        }
        nlohmann::ordered_json operator()(bool b) const {
            return b;
        }
        nlohmann::ordered_json operator()(int64_t v) const {
            return v;
        }
        nlohmann::ordered_json operator()(uint64_t v) const {
            return v;
        }
        nlohmann::ordered_json operator()(double v) const {
            return v;
        }
        nlohmann::ordered_json operator()(const std::string &s) const {
            return s;
        }
    };
    return std::visit(Visitor{}, cell);
}

int resolve_threads(std::optional<int> flag) {
    if (flag) {
        return *flag;
    }
    if (const char *env = std::getenv(kThreadsEnv)) {
        int v = 0;
        std::string s(env);
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) {
            throw InvalidArgument(std::string(kThreadsEnv) + " must be a positive integer, got '" + s + "'");
        }
        return v;
    }
    return 1;
}

}  // namespace

ConfigError::ConfigError(const std::string &field, int line, const std::string &message)
    : InvalidArgument("config line " + std::to_string(line) + ", field " + field + ": " + message),
      field_(field),
      line_(line) {}

std::map<std::string, int> locate_lines(const std::string &text) {
    struct Frame {
        bool object;
        std::string path;
        std::string key;
        size_t index = 0;
        bool expect_key = false;
        bool pending = false;
    };
    std::map<std::string, int> lines;
    std::vector<Frame> stack;
    int line = 1;
    // Marks the start of a value inside an array and returns the value's path.
    auto value_path = [&]() -> std::string {
        if (stack.empty()) {
            return "";
        }
        auto &top = stack.back();
        if (top.object) {
            return join_path(top.path, top.key);
        }
        std::string path = join_path(top.path, std::to_string(top.index));
        if (top.pending) {
            lines.emplace(path, line);
            top.pending = false;
        }
        return path;
    };
    for (size_t i = 0; i < text.size(); i++) {
        char c = text[i];
        if (c == '\n') {
            line++;
        } else if (c == '"') {
            int start = line;
            std::string s;
            for (i++; i < text.size() && text[i] != '"'; i++) {
                if (text[i] == '\\' && i + 1 < text.size()) {
                    i++;
                }
                if (text[i] == '\n') {
                    line++;
                }
                s += text[i];
            }
            if (!stack.empty() && stack.back().object && stack.back().expect_key) {
                stack.back().key = s;
                stack.back().expect_key = false;
                lines.emplace(join_path(stack.back().path, s), start);
            } else {
                value_path();
            }
        } else if (c == '{' || c == '[') {
            std::string path = value_path();
            stack.push_back({c == '{', path, "", 0, c == '{', c == '['});
        } else if (c == '}' || c == ']') {
            if (!stack.empty()) {
                stack.pop_back();
            }
        } else if (c == ',') {
            if (!stack.empty()) {
                if (stack.back().object) {
                    stack.back().expect_key = true;
                } else {
                    stack.back().index++;
                    stack.back().pending = true;
                }
            }
        } else if (c != ':' && !std::isspace(static_cast<unsigned char>(c))) {
            value_path();
        }
    }
    return lines;
}

Config parse_config(const std::string &text) {
    Config config;
    try {
        config.document = json::parse(text);
    } catch (const json::parse_error &e) {
        std::string what = e.what();
        int line = 1;
        auto pos = what.find("at line ");
        if (pos != std::string::npos) {
            line = std::atoi(what.c_str() + pos + 8);
        }
        throw ConfigError("/", line, "malformed JSON: " + what);
    }
    config.lines = locate_lines(text);
    Reader rd(config.lines);
    const auto &doc = config.document;
    rd.check_keys(doc, "", {"clock", "run", "params", "family", "output", "seed"});
    if (doc.contains("run")) {
        config.run = rd.string(doc["run"], "/run");
        const auto &known = commands();
        if (std::find(known.begin(), known.end(), *config.run) == known.end()) {
            rd.fail("/run", "unknown run '" + *config.run + "'");
        }
    }
    if (doc.contains("clock")) {
        config.clock = read_clock(rd, doc["clock"]);
    }
    if (doc.contains("params")) {
        config.params = read_params(rd, doc["params"]);
    }
    if (doc.contains("family")) {
        config.family = read_family(rd, doc["family"]);
    }
    if (doc.contains("output")) {
        rd.check_keys(doc["output"], "/output", {"path", "format"});
        if (doc["output"].contains("path")) {
            config.output_path = rd.string(doc["output"]["path"], "/output/path");
        }
        if (doc["output"].contains("format")) {
            config.output_format = rd.string(doc["output"]["format"], "/output/format");
            if (*config.output_format != "csv" && *config.output_format != "json") {
                rd.fail("/output/format", "format must be csv or json");
            }
        }
    }
    if (doc.contains("seed")) {
        config.seed = rd.natural(doc["seed"], "/seed");
    }
    return config;
}

const std::vector<std::string> &commands() {
    static const std::vector<std::string> names = {"spectrum", "dist", "fidelity", "tradeoff", "cloner-check"};
    return names;
}

Table run_command(const std::string &command, const Config &config, const RunOptions &options) {
    if (command == "spectrum") {
        return cmd_spectrum(config);
    }
    if (command == "dist") {
        return cmd_dist(config);
    }
    if (command == "fidelity") {
        return cmd_fidelity(config, options);
    }
    if (command == "tradeoff") {
        return cmd_tradeoff(config, options);
    }
    if (command == "cloner-check") {
        return cmd_cloner_check(config, options);
    }
    throw InvalidArgument("unknown command '" + command + "'");
}

void write_csv(const Table &table, std::ostream &out) {
    for (size_t i = 0; i < table.columns.size(); i++) {
        out << (i ? "," : "") << csv_cell(table.columns[i]);
    }
    out << "\n";
    for (const auto &row : table.rows) {
        for (size_t i = 0; i < row.size(); i++) {
            out << (i ? "," : "") << csv_cell(row[i]);
        }
        out << "\n";
    }
}

void write_json(const Table &table, const std::string &command, const Config &config, const RunOptions &options,
                std::ostream &out) {
    nlohmann::ordered_json doc;
    doc["meta"]["schema"] = kSchema;
    doc["meta"]["version"] = kVersion;
    doc["meta"]["command"] = command;
    doc["meta"]["seed"] = options.seed;
    doc["meta"]["config"] = nlohmann::ordered_json::parse(config.document.dump());
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto &row : table.rows) {
        nlohmann::ordered_json record;
        // The first column holds the schema token; its cell is the record type.
        record["record"] = json_cell(row[0]);
        for (size_t i = 1; i < row.size(); i++) {
            record[table.columns[i]] = json_cell(row[i]);
        }
        doc["rows"].push_back(std::move(record));
    }
    out << doc.dump(2) << "\n";
}

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Clock-state lattices, postselected cloning fidelities and filter trade-offs", "clocklat"};
    std::string command;
    std::string config_path;
    std::string out_path;
    std::string format;
    std::optional<int> threads;
    std::optional<uint64_t> seed;
    app.add_option("command", command, "One of: spectrum, dist, fidelity, tradeoff, cloner-check")
        ->required()
        ->check(CLI::IsMember(commands()));
    app.add_option("--config", config_path, "JSON experiment config")->required();
    app.add_option("--out", out_path, "Output file (default: stdout)");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--threads", threads, "Worker threads (overrides " + std::string(kThreadsEnv) + ")")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Seed for every stochastic component");
    app.set_version_flag("--version", kVersion);

    std::vector<char *> argv;
    std::vector<std::string> storage = args;
    for (auto &a : storage) {
        argv.push_back(a.data());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kOk : kValidation;
    }

    try {
        std::ifstream in(config_path);
        if (!in) {
            throw InvalidArgument("cannot read config file '" + config_path + "'");
        }
        std::stringstream buffer;
        buffer << in.rdbuf();
        Config config = parse_config(buffer.str());
        if (config.run && *config.run != command) {
            throw ConfigError("/run", Reader(config.lines).line_for("/run"),
                              "config is for '" + *config.run + "' but the command is '" + command + "'");
        }
        RunOptions options;
        options.seed = seed.value_or(config.seed.value_or(kDefaultSeed));
        options.threads = resolve_threads(threads);

        std::string path = !out_path.empty() ? out_path : config.output_path.value_or("");
        std::string fmt = format;
        if (fmt.empty()) {
            fmt = config.output_format.value_or("");
        }
        if (fmt.empty()) {
            fmt = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0 ? "json" : "csv";
        }

        Table table = run_command(command, config, options);
        std::ostringstream rendered;
        if (fmt == "json") {
            write_json(table, command, config, options, rendered);
        } else {
            write_csv(table, rendered);
        }
        if (path.empty()) {
            out << rendered.str();
        } else {
            std::ofstream file(path, std::ios::binary);
            file << rendered.str();
            if (!file) {
                err << "clocklat: error: cannot write '" << path << "'\n";
                return kOther;
            }
        }
        return kOk;
    } catch (const InvalidArgument &e) {
        err << "clocklat: error: " << e.what() << "\n";
        return kValidation;
    } catch (const ResourceCapExceeded &e) {
        err << "clocklat: resource cap exceeded: " << e.what() << "\n";
        return kResourceCap;
    } catch (const NotConverged &e) {
        err << "clocklat: not converged: " << e.what() << "\n";
        return kNotConverged;
    } catch (const std::exception &e) {
        err << "clocklat: error: " << e.what() << "\n";
        return kOther;
    }
}

}  // namespace clocklat::cli
