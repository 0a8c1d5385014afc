import sys
d = sys.stdin.read().split()
n = int(d[0])
sys.stdout.write('  ' + str(sum(int(x) for x in d[1:1 + n])) + '  \n\n')
