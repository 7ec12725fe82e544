"""Plain CSV output: one file per field plus trajectory, conservation and step logs."""
import csv
import os

import numpy as np

FIELDS = (("density", "rho [kg/m^3]"), ("velocity", "u [m/s]"), ("pressure", "p [Pa]"),
          ("sxx", "s_xx [Pa]"), ("energy", "E [J/kg]"))


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) for v in r])


def write_report(report, out_dir):
    """Write a run's CSV files into ``out_dir``; returns the list of paths."""
    os.makedirs(out_dir, exist_ok=True)
    st = report.state
    rho, u, p, s = report.primitives()
    values = {"density": rho, "velocity": u, "pressure": p, "sxx": s, "energy": st.U[2] / rho}
    paths = []
    for name, label in FIELDS:
        path = os.path.join(out_dir, f"{name}.csv")
        _write(path, ["x_center [m]", "dx [m]", label],
               zip(st.centers, st.widths, values[name]))
        paths.append(path)
    n = st.nodes.size
    path = os.path.join(out_dir, "trajectory.csv")
    _write(path, ["t [s]"] + [f"x_{k} [m]" for k in range(n)],
           (np.concatenate(([t], x)) for t, x in zip(report.trajectory_t, report.trajectory)))
    paths.append(path)
    path = os.path.join(out_dir, "conservation.csv")
    _write(path, ["t [s]", "mass [kg/m^2]", "momentum [kg/(m s)]", "energy [J/m^2]",
                  "drift [-]"], report.conservation)
    paths.append(path)
    path = os.path.join(out_dir, "steps.csv")
    _write(path, ["step", "t [s]", "dt [s]"],
           ((k + 1, t, dt) for k, (t, dt) in enumerate(zip(report.times[1:], report.dt))))
    paths.append(path)
    return paths


def write_table(table, path, norm="l1"):
    from .analysis import COMPONENTS, observed_orders
    errs = table.l1 if norm == "l1" else table.l2
    orders = observed_orders(errs, table.cells)
    header = ["N"]
    for c in COMPONENTS:
        header += [f"{norm}_{c}", f"order_{c}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k, n in enumerate(table.cells):
            row = [n]
            for j in range(len(COMPONENTS)):
                o = orders[k, j]
                row += [repr(float(errs[k, j])), "nan" if not np.isfinite(o) else f"{o:.4f}"]
            w.writerow(row)
    return path


def read_csv(path):
    """(header, float array) of a file written here."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = np.array([[float(v) for v in row] for row in r])
    return header, data
