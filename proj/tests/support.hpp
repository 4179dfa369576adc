#pragma once

#include <cstdint>
#include <vector>

#include "dhac/graph.hpp"

namespace dhac::testing {

// out = a*b + a over two Int16 inputs.
inline Graph mul_add_graph() {
    GraphBuilder b("mul_add");
    const NodeId a = b.input();
    const NodeId c = b.input();
    b.output(b.add(b.mul(a, c), a));
    return b.build();
}

inline std::vector<Scalar> ints(std::initializer_list<int> v) {
    std::vector<Scalar> out;
    for (int x : v) out.push_back(Scalar::int16(static_cast<std::int16_t>(x)));
    return out;
}

}  // namespace dhac::testing
