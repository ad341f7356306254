#include "orc/reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "orc/hash.hpp"

namespace orc {

namespace {

// Column permutation that walks channel_map in ascending node-id order.
std::vector<int> ascending_order(const std::vector<int>& channel_map) {
    std::vector<int> order(channel_map.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return channel_map[a] < channel_map[b]; });
    return order;
}

}  // namespace

std::string trajectory_id(const TrajectoryMeta& meta) {
    std::uint64_t h = fnv1a64("trajectory-v1");
    h = fnv1a64(meta.model_hash, h);
    h = fnv1a64(meta.seed, h);
    h = fnv1a64(meta.payload ? meta.payload->mass_g : 0.0, h);
    h = fnv1a64(meta.payload ? meta.payload->position : std::string("-"), h);
    for (const ExcitationSegment& seg : meta.excitation.segments) {
        h = fnv1a64(seg.amplitude_mm, h);
        h = fnv1a64(seg.frequency_hz, h);
        h = fnv1a64(seg.duration_s, h);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

StateMatrix trim_washout(const Trajectory& traj, double head_s,
                         double tail_s) {
    if (head_s < 0.0 || tail_s < 0.0)
        throw std::invalid_argument("washout durations must be non-negative");
    const int total = traj.sample_count();
    const int skip_head = static_cast<int>(std::lround(head_s * traj.sample_rate));
    const int skip_tail = static_cast<int>(std::lround(tail_s * traj.sample_rate));
    const int count = total - skip_head - skip_tail;
    if (count < 1)
        throw InsufficientSamples(
            "washout of " + std::to_string(skip_head) + "+" +
            std::to_string(skip_tail) + " frames leaves nothing of " +
            std::to_string(total));

    StateMatrix out;
    out.values = traj.states.middleRows(skip_head, count);
    if (!out.values.allFinite())
        throw std::invalid_argument("trajectory contains non-finite samples");
    out.channel_map.resize(traj.node_count());
    std::iota(out.channel_map.begin(), out.channel_map.end(), 0);
    out.origin = {{trajectory_id(traj.meta), skip_head, count}};
    return out;
}

StateMatrix stack_segments(const std::vector<StateMatrix>& parts) {
    if (parts.empty())
        throw std::invalid_argument("cannot stack zero state matrices");
    const StateMatrix& first = parts.front();
    long total = 0;
    for (const StateMatrix& p : parts) {
        if (p.channel_map != first.channel_map)
            throw ChannelMismatch("stacked state matrices use different channels");
        total += p.rows();
    }

    StateMatrix out;
    out.values.resize(total, first.channels());
    out.channel_map = first.channel_map;
    long at = 0;
    for (const StateMatrix& p : parts) {
        out.values.middleRows(at, p.rows()) = p.values;
        out.origin.insert(out.origin.end(), p.origin.begin(), p.origin.end());
        at += p.rows();
    }
    return out;
}

ReadoutWeights train_readout(const StateMatrix& states,
                             const TargetSignal& targets, double lambda) {
    const int rows = states.rows();
    const int nch = states.channels();
    if (rows < 1) throw DimensionMismatch("state matrix has no rows");
    if (targets.values.rows() != rows)
        throw DimensionMismatch(
            "target rows (" + std::to_string(targets.values.rows()) +
            ") do not match state rows (" + std::to_string(rows) + ")");
    if (targets.values.cols() < 1)
        throw DimensionMismatch("target signal has no columns");
    if (lambda < 0.0)
        throw std::invalid_argument("ridge parameter must be non-negative");
    if (!states.values.allFinite() || !targets.values.allFinite())
        throw std::invalid_argument("training data contains non-finite values");

    Eigen::MatrixXd design(rows, nch + 1);
    design.col(0).setOnes();
    design.rightCols(nch) = states.values;

    Eigen::MatrixXd solution;
    if (lambda == 0.0) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(
            design, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-10);
        solution = svd.solve(targets.values);
    } else {
        Eigen::MatrixXd gram = design.transpose() * design;
        for (int i = 1; i <= nch; ++i) gram(i, i) += lambda;  // bias stays free
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        if (ldlt.info() != Eigen::Success)
            throw SingularSystem("ridge normal equations failed to factor");
        solution = ldlt.solve(design.transpose() * targets.values);
        if (!solution.allFinite())
            throw SingularSystem("ridge solve produced non-finite weights");
    }

    ReadoutWeights out;
    out.bias = solution.row(0);
    out.weights = solution.bottomRows(nch);
    out.channel_map = states.channel_map;
    out.labels = targets.labels;
    out.lambda = lambda;
    return out;
}

Eigen::MatrixXd reservoir_output(const StateMatrix& states,
                                 const ReadoutWeights& readout) {
    if (states.channel_map != readout.channel_map)
        throw ChannelMismatch(
            "state matrix channels do not match the trained readout");

    const int ntask = static_cast<int>(readout.weights.cols());
    Eigen::MatrixXd out(states.rows(), ntask);
    for (int t = 0; t < ntask; ++t) out.col(t).setConstant(readout.bias(t));
    // Fixed accumulation order makes the result independent of how the
    // caller happened to permute columns and weight rows together.
    for (int c : ascending_order(states.channel_map))
        for (int t = 0; t < ntask; ++t)
            out.col(t) += states.values.col(c) * readout.weights(c, t);
    return out;
}

double rmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate) {
    if (truth.size() != estimate.size() || truth.size() == 0)
        throw DimensionMismatch(
            "rmse needs two equal-length non-empty series, got " +
            std::to_string(truth.size()) + " and " +
            std::to_string(estimate.size()));
    return std::sqrt((truth - estimate).squaredNorm() /
                     static_cast<double>(truth.size()));
}

StateMatrix select_channels(const StateMatrix& states,
                            const std::vector<int>& node_ids) {
    if (node_ids.empty())
        throw std::invalid_argument("channel subset must not be empty");
    StateMatrix out;
    out.values.resize(states.rows(), static_cast<long>(node_ids.size()));
    out.channel_map = node_ids;
    out.origin = states.origin;
    for (size_t k = 0; k < node_ids.size(); ++k) {
        const auto it = std::find(states.channel_map.begin(),
                                  states.channel_map.end(), node_ids[k]);
        if (it == states.channel_map.end())
            throw UnknownChannel("node " + std::to_string(node_ids[k]) +
                                 " is not a channel of this state matrix");
        if (std::count(node_ids.begin(), node_ids.end(), node_ids[k]) > 1)
            throw std::invalid_argument("duplicate channel in subset");
        out.values.col(static_cast<long>(k)) =
            states.values.col(it - states.channel_map.begin());
    }
    return out;
}

StateMatrix select_channels(const StateMatrix& states, int count,
                            std::uint64_t seed) {
    const int nch = states.channels();
    if (count < 1 || count > nch)
        throw std::invalid_argument("channel count must be in [1, " +
                                    std::to_string(nch) + "]");
    std::vector<int> ids = states.channel_map;
    std::mt19937_64 gen(seed);
    // Fisher-Yates; gen() % k is deterministic across platforms, unlike
    // std::uniform_int_distribution.
    for (int i = nch - 1; i > 0; --i) {
        const int j = static_cast<int>(gen() % static_cast<std::uint64_t>(i + 1));
        std::swap(ids[i], ids[j]);
    }
    ids.resize(count);
    std::sort(ids.begin(), ids.end());
    return select_channels(states, ids);
}

}  // namespace orc
