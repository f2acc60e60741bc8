#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "shpol/channel.hpp"
#include "shpol/receiver.hpp"

using namespace shpol;

namespace {

std::vector<cplx> clean_symbols(std::size_t n, std::uint64_t seed) { return qpsk_map(random_bits(2 * n, seed)).symbols; }

}  // namespace

TEST(Homodyne, SelfMixingIsPositiveReal) {
    const cplx a{0.6, -0.8};
    const DualPolWaveform w(std::vector<JonesVector>(64, JonesVector{a, a}), 1e9, 8);
    const auto out = homodyne_detect(w);
    ASSERT_EQ(out.size(), 8u);
    for (const cplx v : out) {
        EXPECT_NEAR(v.real(), std::abs(a), 1e-15);
        EXPECT_NEAR(v.imag(), 0.0, 1e-15);
    }
}

TEST(Homodyne, CleanQpskGivesExactPoints) {
    const auto bits = random_bits(512, 1);
    const DualPolWaveform w = launch_with_carrier(qpsk_modulate(bits, 15e9, 8), 15.0);
    const auto out = homodyne_detect(w);
    const auto ref = qpsk_map(bits).symbols;
    ASSERT_EQ(out.size(), ref.size());
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_LT(std::abs(out[i] - ref[i]), 1e-12);
}

TEST(Homodyne, InvariantToCommonPhase) {
    const DualPolWaveform w = launch_with_carrier(qpsk_modulate(random_bits(512, 2), 15e9, 8), 10.0);
    const auto base = homodyne_detect(w);
    for (double psi : {0.3, 2.0, -1.1}) {
        const auto rotated = homodyne_detect(apply_matrix(w, JonesMatrix::from(std::polar(1.0, psi), 0.0, 0.0, std::polar(1.0, psi))));
        for (std::size_t i = 0; i < base.size(); ++i) ASSERT_LT(std::abs(rotated[i] - base[i]), 1e-12);
    }
}

TEST(Homodyne, Errors) {
    const DualPolWaveform sig = qpsk_modulate(random_bits(16, 3), 1e9, 8);
    EXPECT_THROW(homodyne_detect(sig), MeasurementError);  // no carrier
    const DualPolWaveform other = launch_with_carrier(qpsk_modulate(random_bits(32, 3), 1e9, 8), 0.0);
    EXPECT_THROW(homodyne_detect(sig, other), InvalidArgument);
}

TEST(PhaseRecover, AlignedInputGivesZero) {
    const auto r = phase_recover(clean_symbols(256, 4));
    EXPECT_NEAR(r.phase, 0.0, 1e-12);
}

TEST(PhaseRecover, RecoversKnownRotation) {
    const auto sym = clean_symbols(256, 5);
    for (double rot : {kPi / 7, -0.5, 1.2, 3.0}) {
        std::vector<cplx> in;
        for (const cplx s : sym) in.push_back(s * std::polar(1.0, rot));
        const auto r = phase_recover(in);
        const double err = std::remainder(r.phase - rot, kPi / 2);
        EXPECT_NEAR(err, 0.0, 1e-12);
        EXPECT_GT(r.phase, -kPi / 4);
        EXPECT_LE(r.phase, kPi / 4);
        cplx acc{};
        for (const cplx v : r.corrected) acc += v * v * v * v;
        EXPECT_LT(std::abs(std::remainder(std::arg(acc) - kPi, kTwoPi)), 1e-6);
        EXPECT_NEAR(evm(r.corrected), 0.0, 1e-10);
    }
}

TEST(PhaseRecover, Errors) {
    EXPECT_THROW(phase_recover(clean_symbols(63, 6)), InvalidArgument);
    EXPECT_THROW(phase_recover(std::vector<cplx>(64)), MeasurementError);
}

TEST(Evm, IdealIsZero) { EXPECT_EQ(evm(clean_symbols(100, 7)), 0.0); }

TEST(Evm, RadialDisplacementClosedForm) {
    std::vector<cplx> iq;
    for (const cplx s : clean_symbols(100, 8)) iq.push_back(s * 1.1);
    EXPECT_NEAR(evm(iq), 10.0, 1e-9);
    EXPECT_THROW(evm(std::vector<cplx>{}), InvalidArgument);
}

TEST(Evm, InvariantUnderQuarterTurnPreRotation) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 0.05);
    std::vector<cplx> iq;
    for (const cplx s : clean_symbols(1024, 9)) iq.push_back(s * std::polar(1.0, 0.2) + cplx{g(rng), g(rng)});
    const double base = evm(phase_recover(iq).corrected);
    for (int k = 1; k < 4; ++k) {
        std::vector<cplx> rotated;
        for (const cplx v : iq) rotated.push_back(v * std::polar(1.0, k * kPi / 2));
        EXPECT_NEAR(evm(phase_recover(rotated).corrected), base, 1e-9);
    }
}

TEST(Evm, DecreasesWithOsnr) {
    const auto bits = balanced_qpsk_bits(4096, 10);
    const DualPolWaveform tx = launch_with_carrier(qpsk_modulate(bits, 15e9, 8), 15.0);
    const double signal_power = mean_power(tx).px;
    double prev = 1e9;
    for (double osnr : {10.0, 15.0, 20.0, 25.0}) {
        ChannelConfig cfg;
        cfg.osnr_db = osnr;
        cfg.rng_seed = 100;
        const RxResult r = receive(add_noise(tx, cfg, signal_power), bits);
        EXPECT_LT(r.evm_percent, prev) << "OSNR " << osnr;
        prev = r.evm_percent;
    }
}

TEST(Ber, ResolvesQuarterTurnAmbiguity) {
    const auto bits = random_bits(400, 11);
    std::vector<cplx> iq;
    for (const cplx s : qpsk_map(bits).symbols) iq.push_back(s * cplx{0.0, -1.0});
    EXPECT_EQ(bit_error_ratio(iq, bits), 0.0);
    iq[0] = -iq[0];
    EXPECT_NEAR(bit_error_ratio(iq, bits), 2.0 / 400.0, 1e-15);
    EXPECT_THROW(bit_error_ratio(iq, std::vector<std::uint8_t>(3)), InvalidArgument);
}

TEST(Normalize, UnitPowerAndZeroInput) {
    const auto out = normalize_power(std::vector<cplx>{{3.0, 0.0}, {0.0, 4.0}});
    EXPECT_NEAR(std::norm(out[0]) + std::norm(out[1]), 2.0, 1e-12);
    EXPECT_THROW(normalize_power(std::vector<cplx>(4)), MeasurementError);
}

TEST(Constellation, ExportRowsAndRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "shpol_rx_test";
    std::filesystem::create_directories(dir);
    const auto four = clean_symbols(4, 12);
    constellation_export(four, dir / "four.csv");
    EXPECT_EQ(csv::read(dir / "four.csv").rows.size(), 4u);

    std::mt19937_64 rng(13);
    for (int k = 0; k < 5; ++k) {
        std::normal_distribution<double> g;
        std::vector<cplx> iq(16 + rng() % 500);
        for (auto& v : iq) v = {g(rng), g(rng)};
        constellation_export(iq, dir / "rand.csv");
        const auto back = constellation_import(dir / "rand.csv");
        ASSERT_EQ(back.size(), iq.size());
        for (std::size_t i = 0; i < iq.size(); ++i) ASSERT_EQ(back[i], iq[i]);
    }
    std::filesystem::remove_all(dir);
}

TEST(Constellation, IoFailureIsDistinct) {
    EXPECT_THROW(constellation_export(clean_symbols(4, 1), "/nonexistent-dir/x.csv"), IoError);
    EXPECT_THROW(constellation_import("/nonexistent-dir/x.csv"), IoError);
}
