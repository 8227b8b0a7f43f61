"""
A small benchmark table
=======================

The harness runs every (dataset, size, SNR, seed, method) combination and
writes one CSV row per cell. With timing turned off the report is
byte-for-byte reproducible, including when cells run on several threads.
"""

from awcd.bench import Method, run_benchmark, sphere_cloud

datasets = {"sphere": sphere_cloud(3000, seed=0)}
methods = [
    Method("ror", radius=0.12, min_count=10),
    Method("sor", k=30),
    Method("awcd", k=30),
]

report = run_benchmark(datasets, methods, snrs=[1.0, 10.0], seeds=[0], sizes=[1000, 3000])
print(report.to_csv())

# Two runs, serial and threaded, agree exactly once wall-clock time is dropped
a = run_benchmark(datasets, methods, [1.0], [0, 1], workers=1, timing=False).to_csv()
b = run_benchmark(datasets, methods, [1.0], [0, 1], workers=4, timing=False).to_csv()
print("identical reports:", a == b)
