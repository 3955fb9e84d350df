#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mdm/model.hpp"

namespace mdm {

/// Prefix-sum bookkeeping for one residual window. The window covers model
/// steps [first, first + P) with P = L + N; measurement and control block
/// offsets account for the per-step dimensions.
struct StackIndex {
    int first = 0; ///< window start, equals k - N for residual time k
    int L = 0;
    int N = 0;
    int P = 0;
    int n_w = 0;
    int n_v = 0;
    std::vector<int> z_offsets; ///< size P+1; z_offsets[i] = sum of n_z over first..first+i-1
    std::vector<int> u_offsets; ///< size P;   u_offsets[i] = sum of n_u over first..first+i-1

    int z_total() const { return z_offsets.back(); }     ///< stacked measurement length over P steps
    int u_total() const { return u_offsets.back(); }     ///< stacked control length over P-1 steps
    int z_head() const { return z_offsets[N]; }          ///< first N measurement blocks
    int z_pred() const { return z_offsets[L]; }          ///< first L blocks (the predicted window)
    int z_cur() const { return z_total() - z_head(); }   ///< last L blocks (the residual window)
    int z_tail() const { return z_total() - z_pred(); }  ///< last N blocks
    int w_total() const { return (P - 1) * n_w; }
    int v_total() const { return P * n_v; }
    int noise_total() const { return w_total() + v_total(); }
};

/// Builds the window index for residual time k. Throws DataError when the
/// window [k-N, k+L-1] leaves the horizon.
StackIndex window_index(const LtvModel& model, int k, int L, int N);

/// F_{k+j-1} * ... * F_{k+1} * F_k; identity for j = 0.
Eigen::MatrixXd transition_product(const LtvModel& model, int k, int j);

/// Strictly block-lower-triangular response map of the stacked window:
/// block (i, j) is H_{k+i} * transition_product(k+j+1, i-j-1) for i > j,
/// zero otherwise. Shape n_z-stack(L) x (L-1) n_x; zero-width for L = 1.
Eigen::MatrixXd input_response(const LtvModel& model, int k, int L);

/// Block diagonal of G_first .. G_{first+count-1}; (count n_x) x (stacked n_u).
Eigen::MatrixXd control_block_diag(const LtvModel& model, int first, int count);

/// Block diagonal of E_first .. E_{first+count-1}; (count n_x) x (count n_w).
Eigen::MatrixXd state_noise_block_diag(const LtvModel& model, int first, int count);

/// Block diagonal of D_first .. D_{first+count-1} with row blocks sized by
/// the per-step measurement dimensions; (stacked n_z) x (count n_v).
Eigen::MatrixXd meas_noise_block_diag(const LtvModel& model, int first, int count);

/// N-step predictor gain: observability_stack(k, L) * transition_product(k-N, N)
/// * pinv(observability_stack(k-N, L)). Throws RankError when the stack at
/// k-N is column-rank deficient.
Eigen::MatrixXd predictor_gain(const LtvModel& model, int k, int L, int N);

/// The two blocks of the residual combination matrix: `state_gain`
/// multiplies the stacked state-level injections of the window (P-1 blocks
/// of width n_x) and `meas_gain` multiplies the stacked measurements of
/// the window (and, through the D block diagonal, the measurement noises).
/// N = 0 uses the projector form meas_gain = I - O pinv(O),
/// state_gain = meas_gain * input_response.
struct ResidualMaps {
    Eigen::MatrixXd state_gain; ///< n_z-stack(L at k) x (P-1) n_x
    Eigen::MatrixXd meas_gain;  ///< n_z-stack(L at k) x n_z-stack(P at k-N)
};
ResidualMaps residual_maps(const LtvModel& model, int k, int L, int N);

/// All per-window operators needed to evaluate residuals and their
/// second-moment maps.
struct ResidualKernel {
    int k = 0;
    StackIndex idx;
    Eigen::MatrixXd state_gain;  ///< left block of `combined`
    Eigen::MatrixXd meas_gain;   ///< right block of `combined`
    Eigen::MatrixXd combined;    ///< [state_gain, meas_gain]
    Eigen::MatrixXd data_map;    ///< maps [-controls; measurements] to [injections; measurements]
    Eigen::MatrixXd noise_shape; ///< blkdiag(E block diag, D block diag)
    Eigen::MatrixXd noise_map;   ///< combined * noise_shape; maps stacked (w, v) to the residual
    Eigen::MatrixXd control_map; ///< state_gain * control block diag
};
ResidualKernel build_kernel(const LtvModel& model, int k, int L, int N);

} // namespace mdm
