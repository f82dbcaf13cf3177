// Copyright 2026 The Postforge Authors
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

#pragma once

/// Unitary dilation of a real 2x2 matrix.
///
/// The ancilla is the second target (most significant local bit); projecting
/// it onto |0> after the gate applies M / s to the data qubit.

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "postforge/circuit.hpp"

namespace postforge {

struct BlockEncoding {
    OpaquePtr unitary;
    double scale = 1;
};

inline BlockEncoding block_encode_2x2(const Eigen::Matrix2d &m, std::string label = "blk") {
    if (!m.allFinite()) {
        throw InvalidArgument("block encoding needs a finite matrix");
    }
    if (m.cwiseAbs().maxCoeff() == 0) {
        throw ZeroMatrix("cannot block-encode the zero matrix");
    }
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector2d sv = svd.singularValues();
    const double scale = std::max(1.0, sv(0));
    Eigen::Vector2d cos = sv / scale;
    Eigen::Vector2d sin;
    for (int i = 0; i < 2; i++) {
        cos(i) = std::min(1.0, cos(i));
        sin(i) = std::sqrt(std::max(0.0, 1 - cos(i) * cos(i)));
    }
    const Eigen::Matrix2d a = svd.matrixU();
    const Eigen::Matrix2d bt = svd.matrixV().transpose();
    Eigen::Matrix4d left = Eigen::Matrix4d::Zero();
    Eigen::Matrix4d right = Eigen::Matrix4d::Zero();
    left.topLeftCorner<2, 2>() = a;
    left.bottomRightCorner<2, 2>() = a;
    right.topLeftCorner<2, 2>() = bt;
    right.bottomRightCorner<2, 2>() = bt;
    Eigen::Matrix4d core = Eigen::Matrix4d::Zero();
    core.topLeftCorner<2, 2>() = cos.asDiagonal();
    core.topRightCorner<2, 2>() = -Eigen::Matrix2d(sin.asDiagonal());
    core.bottomLeftCorner<2, 2>() = sin.asDiagonal();
    core.bottomRightCorner<2, 2>() = cos.asDiagonal();
    const Eigen::Matrix4d u = left * core * right;
    return {make_opaque_matrix(std::move(label), u.cast<Complex>()), scale};
}

}  // namespace postforge
