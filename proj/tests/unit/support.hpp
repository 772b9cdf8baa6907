/*
   Copyright 2026 The slowfast Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>

// Running mean of a scalar with the standard error of that mean.
struct Sample {
    double n = 0.0;
    double s = 0.0;
    double ss = 0.0;

    void add(double x)
    {
        n += 1.0;
        s += x;
        ss += x * x;
    }
    double mean() const { return s / n; }
    double se() const
    {
        double const m = mean();
        return std::sqrt((ss / n - m * m) / n);
    }
    // |mean - target| in standard errors.
    double z(double target) const { return std::abs(mean() - target) / se(); }
};
