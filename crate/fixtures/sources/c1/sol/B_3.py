n = int(input())
best = None
for x in map(int, input().split()):
    best = x if best is None or x > best else best
print(best)
