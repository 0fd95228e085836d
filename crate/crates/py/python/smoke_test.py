"""Exercise the extension module end to end; exits non-zero on failure."""

import math

import cdp_conformal as cc

assert cc.conformal_quantile([3.0, 1.0, 2.0, 5.0, 4.0], 0.5) == 3.0
assert math.isinf(cc.conformal_quantile([1.0, 2.0], 0.1))
assert abs(cc.erf(cc.inverse_erf(0.9)) - 0.9) < 1e-12
lo, hi = cc.gaussian_interval(5.0, 2.0, 0.1)
assert abs((hi - lo) / 2 - 2 * 1.6448536) < 1e-5

y, p = cc.generate_scenario("heteroscedastic-v1", 6000, seed=1)
cal_y, cal_p, test_y, test_p = y[:1000], p[:1000], y[1000:], p[1000:]

cdp = cc.CDP.calibrate(cal_y, cal_p, alpha=0.1, bounds=(0.0, 63.0))
iv = cdp.predict(test_p)
los, his = [a for a, _ in iv], [b for _, b in iv]
cov = cc.picp(los, his, test_y)
assert 0.87 < cov < 0.93, cov
assert cc.CDP.from_text(cdp.to_text()).s_hat == cdp.s_hat

acc = cc.CdpAcc.calibrate(cal_y, cal_p, alpha=0.1, range=(0.0, 63.0), bounds=(0.0, 63.0))
assert acc.bins == 14 and len(acc.bin_summary()) == 14
iv_acc = acc.predict(test_p)
assert cc.CdpAcc.from_text(acc.to_text()).predict(test_p) == iv_acc
acc_los, acc_his = [a for a, _ in iv_acc], [b for _, b in iv_acc]
print(
    f"cdp picp={cov:.4f} mpiw={cc.mpiw(los, his):.4f} ssc={cc.ssc_bdi(los, his, test_y):.4f}; "
    f"cdp-acc picp={cc.picp(acc_los, acc_his, test_y):.4f} mpiw={cc.mpiw(acc_los, acc_his):.4f}"
)

# scores max(q_lo - y, y - q_hi) = 1, -1, 1; rank ceil(4 * 0.5) = 2 -> s_hat = 1
cqr = cc.CQR.calibrate([3.0, 2.0, 5.0], [0.0, 1.0, 2.0], [2.0, 3.0, 4.0], alpha=0.5)
assert cqr.s_hat == 1.0
assert cqr.predict([0.0], [1.0]) == [(-1.0, 2.0)]

mae, rmse = cc.point_errors([1.0, 3.0], [2.0, 2.0])
assert mae == 1.0 and rmse == 1.0

try:
    cc.CDP.calibrate([1.0], [1.0], alpha=1.5)
except ValueError as e:
    assert "alpha" in str(e)
else:
    raise AssertionError("alpha=1.5 accepted")

print("smoke test ok")
