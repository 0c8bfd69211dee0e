#pragma once

#include <string>
#include <vector>

#include "cnnaa/netdef.hpp"

namespace cnnaa {

/// Inputs of the battery-life model d = C / (P_n + beta * alpha * P_d).
struct BudgetParams {
    double capacity_wh = 0.0;        // C
    double normal_power_w = 0.0;     // P_n
    double detector_power_w = 0.0;   // P_d
    double alpha = 0.0;              // authentication ratio in [0,1]
    double beta = 0.0;               // device-usage fraction in [0,1]
    double prediction_time_s = 0.0;  // T_a

    void validate() const;
};

/// Battery life in hours. Throws when the effective draw is zero.
double battery_life_hours(const BudgetParams& p);

struct AuthInterval {
    double seconds = 0.0;
    bool never = false;  // alpha == 0: authentication disabled
};

/// How often authentication runs: T_a / alpha.
AuthInterval auth_interval(double prediction_time_s, double alpha);

struct BenchRow {
    std::string name;
    std::size_t params = 0;
    double mean_seconds = 0.0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    double total_seconds = 0.0;  // sum over the benchmarked set
    int repetitions = 0;
};

/// Times forward passes on a constant image per network: `warmup` untimed
/// passes, then the mean of `repetitions` timed ones. The total is the sum
/// over the set; the full binary ensemble costs 40x a single binary net.
BenchReport bench_forward(const std::vector<std::pair<std::string, const Network*>>& nets,
                          int repetitions, int warmup = 5);

std::size_t conv_macs(int h, int w, int kh, int kw, int cin, int cout);
std::size_t dense_macs(int din, int dout);

/// Multiply-accumulates for one forward pass under the builder conventions.
std::size_t count_macs(const NetworkSpec& spec);

}  // namespace cnnaa
