#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>

int main() {
  const int T = 2;
  Eigen::VectorXd lo(2), hi(2);
  lo << -0.4117738592444517, -0.38795473596872398;
  hi << -0.011773859244451707, 0.01204526403127601;
  Eigen::VectorXd y(3);
  y << -0.44975134156584201, 0.83828280632078611, 1.2097282721655065;
  const double anchor = 0.4;

  auto apply_box = [&](Eigen::VectorXd& x) {
    for (int t = 1; t < T; ++t) x[t] = std::clamp(x[t], 0.0, 1.0);
    x[0] = anchor;
    x[T] = anchor;
  };
  auto apply_slabs = [&](Eigen::VectorXd& x, int parity) {
    for (int t = parity; t < T; t += 2) {
      const double s = x[t + 1] - x[t];
      if (s > hi[t]) {
        const double e = 0.5 * (s - hi[t]);
        x[t] += e;
        x[t + 1] -= e;
      } else if (s < lo[t]) {
        const double e = 0.5 * (lo[t] - s);
        x[t] -= e;
        x[t + 1] += e;
      }
    }
  };

  Eigen::VectorXd x = y;
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(T + 1);
  Eigen::VectorXd p1 = Eigen::VectorXd::Zero(T + 1);
  Eigen::VectorXd p2 = Eigen::VectorXd::Zero(T + 1);

  for (int sweep = 0; sweep < 3000; ++sweep) {
    const Eigen::VectorXd before = x;
    Eigen::VectorXd z = x + p0;
    x = z;
    apply_slabs(x, 0);
    p0 = z - x;
    z = x + p1;
    x = z;
    apply_slabs(x, 1);
    p1 = z - x;
    z = x + p2;
    x = z;
    apply_box(x);
    p2 = z - x;
    const double ch = (x - before).lpNorm<Eigen::Infinity>();
    if (sweep < 12 || sweep % 200 == 0 || ch < 1e-10) {
      std::printf("sweep %4d  x1=%.12f  ch=%.3e  |p0|=%.3e |p1|=%.3e |p2|=%.3e\n", sweep, x[1],
                  ch, p0.norm(), p1.norm(), p2.norm());
    }
    if (ch < 1e-10) break;
  }
  std::printf("exact x1 = 0.38822614075554829\n");
  return 0;
}
