// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace epichart {

inline constexpr const char* kEngineVersion = "0.3.0";

}  // namespace epichart
