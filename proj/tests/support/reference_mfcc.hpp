#ifndef SER_TESTS_REFERENCE_MFCC_HPP
#define SER_TESTS_REFERENCE_MFCC_HPP

#include <vector>

#include "ser/matrix.hpp"
#include "ser/mfcc.hpp"

namespace ser::testing {

// Independent MFCC reference used as the oracle for the production pipeline.
// Every stage is re-implemented as plain scalar loops from the documented
// definitions (pre-emphasis, periodic Hann, naive O(n^2) DFT instead of the
// FFT, mel triangles, log floor, DCT-II); the only thing shared with the
// implementation under test is the MfccConfig constants.
ser::Matrix reference_mfcc(const std::vector<double>& samples, const ser::MfccConfig& cfg);

} // namespace ser::testing

#endif
