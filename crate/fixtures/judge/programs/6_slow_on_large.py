import sys, time
d = sys.stdin.read().split()
n = int(d[0])
time.sleep(n / 1000)
print(sum(int(x) for x in d[1:1 + n]))
