#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "orc/dynamics.hpp"
#include "orc/errors.hpp"

namespace orc {

// One contiguous block of frames taken from a source trajectory.
struct SegmentOrigin {
    std::string trajectory_id;
    int first_frame = 0;
    int frame_count = 0;
};

// Reservoir states: rows are sampled instants, columns are node channels
// (vertical displacement in mm). channel_map holds the node id behind each
// column; origin records which trajectory windows the rows came from.
struct StateMatrix {
    Eigen::MatrixXd values;
    std::vector<int> channel_map;
    std::vector<SegmentOrigin> origin;

    int rows() const { return static_cast<int>(values.rows()); }
    int channels() const { return static_cast<int>(values.cols()); }
};

// Reference outputs for training: one column per task, rows aligned 1:1
// with the state matrix rows they were built against.
struct TargetSignal {
    Eigen::MatrixXd values;
    std::vector<std::string> labels;
};

// Trained linear readout: output_j = bias + sum_i weights(i) * state_j(i),
// one column of weights (and one bias) per task.
struct ReadoutWeights {
    Eigen::VectorXd bias;
    Eigen::MatrixXd weights;  // channels x tasks
    std::vector<int> channel_map;
    std::vector<std::string> labels;
    double lambda = 0.0;
};

// Stable content-derived identifier for a trajectory (16 hex digits).
std::string trajectory_id(const TrajectoryMeta& meta);

// Middle window of a trajectory with the transient head/tail dropped.
// Channels keep raw lab-frame values; the readout bias absorbs offsets.
StateMatrix trim_washout(const Trajectory& traj, double head_s = 5.0,
                         double tail_s = 5.0);

// Row-wise concatenation; all parts must share one channel_map.
StateMatrix stack_segments(const std::vector<StateMatrix>& parts);

// Least-squares readout fit against [1 S]. lambda = 0 uses the SVD
// pseudo-inverse with singular values below 1e-10 * sigma_max dropped;
// lambda > 0 solves the ridge normal equations with the bias column
// left unregularized.
ReadoutWeights train_readout(const StateMatrix& states,
                             const TargetSignal& targets, double lambda = 0.0);

// Evaluate the readout on every row. Channels are accumulated in ascending
// node-id order so consistently permuted inputs give bit-identical output.
Eigen::MatrixXd reservoir_output(const StateMatrix& states,
                                 const ReadoutWeights& readout);

// Root mean squared error between two equal-length series.
double rmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate);

// Column subset by explicit node ids (kept in the order given).
StateMatrix select_channels(const StateMatrix& states,
                            const std::vector<int>& node_ids);

// Uniform random subset without replacement, deterministic per seed;
// the selected columns are returned in ascending node-id order.
StateMatrix select_channels(const StateMatrix& states, int count,
                            std::uint64_t seed);

}  // namespace orc
