# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled round kernel.  Mirrors engine/pyengine.py operation for operation
on the flat state layout produced by engine/plan.py."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t
from libc.string cimport memset, memcpy

cnp.import_array()

DEF NCOL = 29
DEF NCHCOL = 7
DEF MAXM = 64
DEF K_KIND = 0
DEF K_LO = 1
DEF K_M = 2
DEF K_C = 3
DEF K_CH0 = 4
DEF K_CH1 = 5
DEF K_K0 = 6
DEF K_K1 = 7
DEF K_X = 8
DEF K_CF0 = 9
DEF K_CF1 = 10
DEF K_SPLIT = 11
DEF K_OFF_C = 12
DEF K_OFF_S0 = 13
DEF K_OFF_S1 = 14
DEF K_OFF_F0 = 15
DEF K_OFF_F1 = 16
DEF K_OFF_P = 17
DEF K_OFF_L = 18
DEF K_W0 = 19
DEF K_W1 = 20
DEF K_T0 = 21
DEF K_T1 = 22
DEF K_MSG = 23
DEF K_NBR = 24
DEF K_SPAN = 25
DEF K_DEF0 = 26
DEF K_DEF1 = 27
DEF K_CHAN = 28
DEF CH_SIZE = 0
DEF CH_KIND = 1
DEF CH_ROLE = 2
DEF CH_CF = 3
DEF CH_X = 4
DEF CH_TAGID = 5
DEF CH_BITS = 6
DEF P_BASIC = 0
DEF P_EFF = 1
DEF P_WEAK = 2
DEF KIND_A = 1
DEF KIND_B = 2
DEF KD_GENERIC = 0
DEF KD_FLAG = 1
DEF KD_EFILT = 2
DEF KD_BFILT = 3
DEF ROLE_VALUE = 1
DEF ROLE_ECHO = 2
DEF ROLE_LEADER = 3
DEF S_SILENT = 0
DEF S_RANDOM = 1
DEF S_EQUIV = 2
DEF S_JUMP = 3
DEF S_SPOOF = 4
DEF S_SPLIT = 5


cdef inline int64_t pmod(int64_t a, int64_t b) nogil:
    cdef int64_t r = a % b
    if r < 0:
        r += b
    return r


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = z + <uint64_t>0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t adv_random(uint64_t seed, int64_t r, int64_t tagid, int64_t s, int64_t w) nogil:
    cdef uint64_t u = mix64(seed)
    u = mix64(u ^ <uint64_t>r)
    u = mix64(u ^ <uint64_t>tagid)
    u = mix64(u ^ <uint64_t>s)
    u = mix64(u ^ <uint64_t>w)
    return u


cdef int64_t adv_code(int strat, uint64_t seed, int64_t delta, int64_t split, int64_t r,
                      int64_t* ch, int64_t sender, int64_t receiver, int64_t local_recv, int64_t m,
                      int64_t honest, int64_t sref, int64_t rref) nogil:
    cdef int64_t size = ch[CH_SIZE], kind = ch[CH_KIND], Cf = ch[CH_CF]
    cdef int64_t a, c, cv, mm, shift, base
    cdef uint64_t u
    cdef bint low
    if strat == S_SILENT:
        return -1
    u = adv_random(seed, r, ch[CH_TAGID], sender, receiver)
    if strat == S_RANDOM:
        if (u & 3) == 0:
            return -1
        return <int64_t>((u >> 2) % <uint64_t>(size + 2))
    low = local_recv < (m * split) // 100
    if strat == S_EQUIV:
        a = honest if honest != -1 else sref % size
        if kind == KD_FLAG:
            return 0 if low else -1
        if kind == KD_EFILT:
            c = a % Cf
            return c + Cf if low else (c + 1) % Cf + Cf
        if kind == KD_BFILT:
            if low:
                return a
            cv = a // (Cf + 1)
            mm = a % (Cf + 1)
            return ((cv + 1) % (Cf + 1)) * (Cf + 1) + (mm + 1) % (Cf + 1)
        return a if low else (a + 1) % size
    if strat == S_JUMP:
        if kind != KD_EFILT and kind != KD_BFILT:
            return honest
        shift = delta * (r // (ch[CH_X] + 1))
        if kind == KD_EFILT:
            base = honest % Cf if honest != -1 else sref % Cf
            return pmod(base + shift, Cf) + Cf
        if honest != -1:
            cv = honest // (Cf + 1)
            mm = honest % (Cf + 1)
        else:
            cv = Cf
            mm = Cf
        if cv >= Cf:
            cv = sref % Cf
        return pmod(cv + shift, Cf) * (Cf + 1) + mm
    if strat == S_SPOOF:
        if ch[CH_ROLE] == ROLE_LEADER:
            return <int64_t>(u % <uint64_t>size)
        return honest
    if strat == S_SPLIT:
        if ch[CH_ROLE] == ROLE_VALUE or ch[CH_ROLE] == ROLE_ECHO:
            return rref % size
        return honest
    return -1


# ---------------------------------------------------------------------------
# inbox helpers: box[s] = code or -1

cdef inline int count_eq(int64_t* box, int m, int64_t x) nogil:
    cdef int s, k = 0
    for s in range(m):
        if box[s] == x:
            k += 1
    return k


cdef inline int count_ne(int64_t* box, int m, int64_t x) nogil:
    cdef int s, k = 0
    for s in range(m):
        if box[s] != -1 and box[s] != x:
            k += 1
    return k


cdef inline int count_valid(int64_t* box, int m) nogil:
    cdef int s, k = 0
    for s in range(m):
        if box[s] != -1:
            k += 1
    return k


cdef int64_t least_support(int64_t* box, int m, int64_t D, int thr) nogil:
    cdef int s
    cdef int64_t best = -1, c
    for s in range(m):
        c = box[s]
        if c < 0 or c >= D:
            continue
        if best != -1 and c >= best:
            continue
        if count_eq(box, m, c) >= thr:
            best = c
    return best


cdef inline void graded_decision(int64_t* box, int m, int64_t x, int64_t D, int t, bint strong,
                                 int64_t* y, int64_t* g) nogil:
    cdef bint top
    cdef int64_t z
    if strong:
        top = count_eq(box, m, x) >= m - t
    else:
        top = count_ne(box, m, x) <= t
    if top:
        y[0] = x
        g[0] = 1
        return
    z = least_support(box, m, D, t + 1)
    g[0] = 0
    y[0] = x if z == -1 else z


# ---------------------------------------------------------------------------
# stream kernels.  ``out`` is the channel matrix of this slot, sender-major.

cdef inline void bcast(int64_t* out, int m, int v, int64_t code) nogil:
    cdef int w
    for w in range(m):
        out[v * m + w] = code


cdef int schema_size(int ptype, int j, int64_t D) nogil:
    if ptype == P_BASIC:
        return <int>D if j < 3 else 1
    if ptype == P_EFF:
        if j == 4:
            return 1
        if j == 6:
            return <int>(D + 1)
        return <int>D
    if j == 1 or j == 2 or j == 4 or j >= 6:
        return 1
    return <int>D


cdef void king_send(int ptype, int j, int v, int m, int64_t D, int64_t* st, int64_t* out,
                    int64_t* nbr, int64_t* span) nogil:
    cdef int w, cnt, k, i
    cdef int64_t lead = st[1], x = st[0], mask, sp
    if ptype == P_BASIC:
        if j == 0:
            bcast(out, m, v, x)
        elif j == 1:
            if st[2]:
                bcast(out, m, v, x)
        elif j == 2:
            if lead == v:
                bcast(out, m, v, st[3])
        return
    if ptype == P_EFF:
        if j == 0:
            if lead != m:
                out[v * m + lead] = x
        elif j == 1:
            if lead == v and st[2]:
                bcast(out, m, v, x)
        elif j == 2:
            if st[3] != D:
                bcast(out, m, v, st[3])
        elif j == 3:
            mask = st[4]
            for w in range(m):
                if (mask >> w) & 1:
                    out[v * m + w] = x
        elif j == 4:
            if lead == v and st[2] == 0:
                bcast(out, m, v, 0)
        elif j == 5:
            if st[6]:
                bcast(out, m, v, st[5])
        elif j == 6:
            if st[7] == 1:
                bcast(out, m, v, st[5])
            elif st[7] == 2:
                bcast(out, m, v, D)
        else:
            if lead == v:
                bcast(out, m, v, st[8])
        return
    # weak king
    if j == 0:
        cnt = <int>nbr[v * 9]
        for i in range(cnt):
            out[v * m + nbr[v * 9 + 1 + i]] = x
        if lead != m:
            out[v * m + lead] = x
    elif j == 1:
        if st[2]:
            bcast(out, m, v, 0)
    elif j == 2:
        k = <int>st[4]
        if k > 0:
            sp = span[k]
            if sp + 1 >= m:
                bcast(out, m, v, 0)
            else:
                for i in range(sp + 1):
                    out[v * m + (v + i) % m] = 0
    elif j == 3:
        mask = st[5]
        for w in range(m):
            if (mask >> w) & 1:
                out[v * m + w] = x
    elif j == 4:
        if st[6]:
            bcast(out, m, v, 0)
    elif j == 5:
        if lead != v:
            mask = st[7]
            for w in range(m):
                if (mask >> w) & 1:
                    out[v * m + w] = x
        elif st[3] != D:
            bcast(out, m, v, st[3])


cdef void king_recv(int ptype, int j, int v, int m, int64_t D, int64_t* st, int64_t* box,
                    int64_t* nbr, int64_t* span) nogil:
    cdef int t = (m - 1) // 3
    cdef int s, cnt, i, k, differ, best_k, c_k, qlen
    cdef int64_t x = st[0], lead = st[1], mask, c, best, sp, y, g, w
    if ptype == P_BASIC:
        if j == 0:
            st[2] = 1 if count_eq(box, m, x) >= m - t else 0
        elif j == 1:
            graded_decision(box, m, x, D, t, 1, &st[3], &st[4])
        elif j == 2:
            if lead == m:
                st[5] = D
            elif st[4] == 0 and box[lead] != -1:
                st[5] = box[lead]
            else:
                st[5] = st[3]
        return
    if ptype == P_EFF:
        if j == 0:
            st[2] = 1 if (lead == v and count_eq(box, m, x) >= m - t) else 0
        elif j == 1:
            st[3] = D
            if lead != m and box[lead] != -1 and box[lead] != x:
                st[3] = box[lead]
        elif j == 2:
            mask = 0
            for s in range(m):
                if box[s] == x:
                    mask |= (<int64_t>1) << s
            st[4] = mask
        elif j == 3:
            y = least_support(box, m, D, t + 1)
            st[5] = x if y == -1 else y
        elif j == 4:
            st[6] = 1 if (lead != m and box[lead] != -1) else 0
        elif j == 5:
            if st[6]:
                st[7] = 1 if count_ne(box, m, st[5]) <= t else 2
            else:
                st[7] = 0
        elif j == 6:
            graded_decision(box, m, st[5], D, t, 0, &st[8], &st[9])
        else:
            if lead == m:
                st[10] = D
            elif st[9] == 0 and box[lead] != -1:
                st[10] = box[lead]
            else:
                st[10] = st[8]
        return
    if j == 0:
        st[2] = 0
        cnt = <int>nbr[v * 9]
        for i in range(cnt):
            w = nbr[v * 9 + 1 + i]
            if box[w] != -1 and box[w] != x:
                st[2] = 1
        best = D
        if lead == v and count_valid(box, m) == m:
            best_k = -1
            for s in range(m):
                c = box[s]
                c_k = count_eq(box, m, c)
                if c_k > best_k or (c_k == best_k and c < best):
                    best_k = c_k
                    best = c
        st[3] = best
    elif j == 1:
        st[4] = count_valid(box, m)
    elif j == 2 or j == 4:
        mask = 0
        for s in range(m):
            if box[s] != -1:
                mask |= (<int64_t>1) << s
        st[5 if j == 2 else 7] = mask
    elif j == 3:
        k = <int>st[4]
        differ = 0
        qlen = 0
        if k > 0:
            sp = span[k]
            if sp + 1 >= m:
                qlen = m
                for s in range(m):
                    if box[s] != -1 and box[s] != x:
                        differ += 1
            else:
                qlen = <int>(sp + 1)
                for i in range(qlen):
                    w = (v + i) % m
                    if box[w] != -1 and box[w] != x:
                        differ += 1
        st[6] = 1 if (qlen > 0 and 2 * differ >= qlen) else 0
    elif j == 5:
        if lead == m:
            st[8] = D
        else:
            if count_ne(box, m, x) >= t + 1 and box[lead] != -1:
                st[8] = box[lead]
            else:
                st[8] = x


cdef inline int64_t king_out_index(int ptype) nogil:
    if ptype == P_BASIC:
        return 5
    if ptype == P_EFF:
        return 10
    return 8


cdef int64_t king_reference(int ptype, int j, int64_t* st) nogil:
    if ptype == P_BASIC:
        return st[3] if j >= 2 else st[0]
    if ptype == P_EFF:
        if j < 4:
            return st[0]
        if j < 7:
            return st[5]
        return st[8]
    return st[0]


cdef inline int king_rounds(int ptype) nogil:
    if ptype == P_BASIC:
        return 3
    if ptype == P_EFF:
        return 8
    return 6


# ---------------------------------------------------------------------------
# filters.  Layout (see snapshot.py):
#   efficient: mem[m*m] s[m*m] Fh[m] X[m] N[m] Tc[m] a[m] F[m]
#   basic:     mlast[m] M[m] X[m] F[m]

cdef void efilter_send(int64_t* S, int64_t base, int m, int v, int64_t Cf, int64_t Xp,
                       int tlo, int thi, int64_t clock_in, int64_t* out) nogil:
    cdef int64_t* mem = S + base + v * m
    cdef int64_t* s = S + base + m * m + v * m
    cdef int64_t* Fh = S + base + 2 * m * m + v
    cdef int64_t* X = Fh + m
    cdef int64_t* N = Fh + 2 * m
    cdef int64_t* Tc = Fh + 3 * m
    cdef int64_t* a = Fh + 4 * m
    cdef int tsize = thi - tlo
    cdef int w, k, differ
    cdef int64_t cand, probe, target
    cdef bint respond, req
    X[0] = X[0] - 1 if X[0] > 0 else 0
    cand = -1
    k = 0
    for w in range(tlo, thi):
        if k == 0:
            cand = mem[w]
            k = 1
        elif mem[w] == cand:
            k += 1
        else:
            k -= 1
    if cand != -1 and cand != Fh[0]:
        k = 0
        for w in range(tlo, thi):
            if mem[w] == cand:
                k += 1
        if 2 * k > tsize:
            X[0] = Xp + 1
            a[0] = 1
            Fh[0] = cand
    differ = 0
    for w in range(m):
        if mem[w] != Fh[0]:
            differ += 1
    if 3 * differ > m:
        X[0] = Xp + 1
        a[0] = 1
    probe = tlo + pmod(Tc[0] - 2, tsize)
    if mem[probe] != Fh[0]:
        a[0] = 1
    if tlo <= v < thi and 0 <= clock_in < Cf and clock_in != (Fh[0] + 1) % Cf:
        X[0] = Xp + 1
        a[0] = 1
        Fh[0] = clock_in
    else:
        Fh[0] = (Fh[0] + 1) % Cf
    N[0] = (N[0] + 1) % m
    Tc[0] = (Tc[0] + 1) % tsize
    target = tlo + Tc[0]
    for w in range(m):
        mem[w] = (mem[w] + 1) % Cf
        respond = s[w] != 0
        s[w] = 0
        req = a[0] == 1 or mem[w] != Fh[0] or w == N[0] or w == target
        if respond or req:
            out[v * m + w] = Fh[0] + (Cf if req else 0)


cdef void efilter_recv(int64_t* S, int64_t base, int m, int v, int64_t Cf, int64_t* box) nogil:
    cdef int64_t* mem = S + base + v * m
    cdef int64_t* s = S + base + m * m + v * m
    cdef int64_t* Fh = S + base + 2 * m * m + v
    cdef int w
    for w in range(m):
        if box[w] != -1:
            mem[w] = box[w] % Cf
            if box[w] // Cf:
                s[w] = 1
    Fh[4 * m] = 0
    Fh[5 * m] = Fh[0] if Fh[m] == 0 else Cf


cdef void bfilter_send(int64_t* S, int64_t base, int m, int v, int64_t Cf, int tlo, int thi,
                       int64_t clock_in, int64_t* out) nogil:
    cdef int64_t cv = Cf
    if tlo <= v < thi and 0 <= clock_in < Cf:
        cv = clock_in
    bcast(out, m, v, cv * (Cf + 1) + S[base + v])


cdef void bfilter_recv(int64_t* S, int64_t base, int m, int v, int64_t Cf, int64_t Xp,
                       int tlo, int thi, int64_t* box) nogil:
    cdef int t = (m - 1) // 3
    cdef int tsize = thi - tlo
    cdef int w, k, u
    cdef int64_t cv, mm, cand, newm, sup, c
    cdef int64_t* M = S + base + m + v
    cdef int64_t* X = S + base + 2 * m + v
    cdef int64_t cvs[MAXM]
    cdef int64_t mms[MAXM]
    cdef int nc = 0, nm = 0
    for w in range(m):
        if box[w] == -1:
            continue
        cv = box[w] // (Cf + 1)
        mm = box[w] % (Cf + 1)
        if tlo <= w < thi and cv < Cf:
            cvs[nc] = cv
            nc += 1
        mms[nm] = mm
        nm += 1
    newm = Cf
    for u in range(nc):
        c = cvs[u]
        k = 0
        for w in range(nc):
            if cvs[w] == c:
                k += 1
        if 2 * k > tsize:
            newm = c
            break
    sup = -1
    for u in range(nm):
        c = mms[u]
        k = 0
        for w in range(nm):
            if mms[w] == c:
                k += 1
        if k >= m - t:
            sup = c
            break
    if sup != -1:
        if sup < Cf and M[0] < Cf and sup == (M[0] + 1) % Cf:
            X[0] = X[0] - 1 if X[0] > 0 else 0
        else:
            X[0] = Xp
        M[0] = sup
    else:
        X[0] = Xp
    S[base + 3 * m + v] = M[0] if X[0] == 0 else Cf
    S[base + v] = newm


cdef inline int64_t filter_F(int64_t* S, int64_t base, int m, int v, bint eff) nogil:
    if eff:
        return S[base + 2 * m * m + 5 * m + v]
    return S[base + 3 * m + v]


cdef inline int64_t filter_ref(int64_t* S, int64_t base, int m, int v, bint eff, int64_t Cf) nogil:
    cdef int64_t M
    if eff:
        return S[base + 2 * m * m + v]
    M = S[base + m + v]
    return M if M < Cf else 0


# ---------------------------------------------------------------------------

cdef class Core:
    cdef int64_t[:, ::1] inst
    cdef int64_t[:, ::1] chan
    cdef int64_t[::1] nbr
    cdef int64_t[::1] span
    cdef int64_t[::1] defs
    cdef public object state_arr
    cdef int64_t[::1] state
    cdef int64_t[::1] msg
    cdef int64_t[::1] faulty
    cdef int64_t[::1] seed_lead
    cdef int64_t[::1] last_out
    cdef int ninst, n, R, nchan
    cdef bint eff
    cdef int strat
    cdef uint64_t sseed
    cdef int64_t delta, split
    cdef public int64_t round

    def __init__(self, inst, chan, nbr, span, defs, state, int msg_size, faulty, int n, int R,
                 bint efficient, int strategy, uint64_t sseed, int64_t delta, int64_t split):
        self.inst = np.ascontiguousarray(inst, dtype=np.int64)
        self.chan = np.ascontiguousarray(chan, dtype=np.int64)
        self.nbr = np.ascontiguousarray(nbr, dtype=np.int64).reshape(-1)
        self.span = np.ascontiguousarray(span, dtype=np.int64)
        self.defs = np.ascontiguousarray(defs, dtype=np.int64)
        self.state_arr = np.ascontiguousarray(state, dtype=np.int64).copy()
        self.state = self.state_arr
        self.msg = np.full(msg_size, -1, dtype=np.int64)
        self.faulty = np.ascontiguousarray(faulty, dtype=np.int64)
        self.ninst = self.inst.shape[0]
        self.n = n
        self.R = R
        self.nchan = 2 * R + 2
        self.eff = efficient
        self.strat = strategy
        self.sseed = sseed
        self.delta = delta
        self.split = split
        self.round = 0
        self.seed_lead = np.full(n * 2, -1, dtype=np.int64)
        self.last_out = np.full(n * 2, -1, dtype=np.int64)

    cdef void _seed(self, int64_t* row, int s, int v, int m, int64_t x, int64_t lead) nogil:
        cdef int64_t* S = &self.state[0]
        cdef int64_t W = row[K_W0 + s]
        cdef int64_t* slot0 = S + row[K_OFF_S0 + s] + v * self.R * W
        cdef int64_t* d = &self.defs[0] + row[K_DEF0 + s]
        cdef int i
        slot0[0] = x
        slot0[1] = lead
        for i in range(2, W):
            slot0[i] = d[i]

    cdef void _stream_send(self, int64_t* row, int s, int v, int m) nogil:
        cdef int64_t* S = &self.state[0]
        cdef int64_t W = row[K_W0 + s]
        cdef int ptype = <int>row[K_T0 + s]
        cdef int64_t D = row[K_C] + 1
        cdef int j, rounds = king_rounds(ptype)
        cdef int64_t* base = S + row[K_OFF_S0 + s] + v * self.R * W
        cdef int64_t* nb = &self.nbr[0] + row[K_NBR] * 9
        cdef int64_t* sp = &self.span[0] + row[K_SPAN]
        for j in range(rounds):
            king_send(ptype, j, v, m, D, base + j * W,
                      &self.msg[0] + row[K_MSG] + (s * self.R + j) * m * m, nb, sp)

    cdef int64_t _stream_recv(self, int64_t* row, int s, int v, int m) nogil:
        cdef int64_t* S = &self.state[0]
        cdef int64_t W = row[K_W0 + s]
        cdef int ptype = <int>row[K_T0 + s]
        cdef int64_t D = row[K_C] + 1
        cdef int j, w, rounds = king_rounds(ptype), size
        cdef int64_t* base = S + row[K_OFF_S0 + s] + v * self.R * W
        cdef int64_t* nb = &self.nbr[0] + row[K_NBR] * 9
        cdef int64_t* sp = &self.span[0] + row[K_SPAN]
        cdef int64_t* ch
        cdef int64_t box[MAXM]
        cdef int64_t tmp[16]
        cdef int64_t c, out
        cdef int64_t* st
        for j in range(self.R - 1, -1, -1):
            if j == self.R - 1:
                memcpy(tmp, base + j * W, W * sizeof(int64_t))
                st = tmp
            else:
                memcpy(base + (j + 1) * W, base + j * W, W * sizeof(int64_t))
                st = base + (j + 1) * W
            if j >= rounds:
                continue
            size = schema_size(ptype, j, D)
            ch = &self.msg[0] + row[K_MSG] + (s * self.R + j) * m * m
            for w in range(m):
                c = ch[w * m + v]
                box[w] = c if 0 <= c < size else -1
            king_recv(ptype, j, v, m, D, st, box, nb, sp)
        out = tmp[king_out_index(ptype)]
        return -1 if out >= D else out

    cdef void _load_box(self, int64_t* ch, int m, int v, int64_t size, int64_t* box) nogil:
        cdef int w
        cdef int64_t c
        for w in range(m):
            c = ch[w * m + v]
            box[w] = c if 0 <= c < size else -1

    cdef int64_t _child_clock(self, int64_t child, int64_t g) nogil:
        cdef int64_t* crow = &self.inst[child, 0]
        return self.state[crow[K_OFF_C] + g - crow[K_LO]]

    cdef void _send_phase(self) nogil:
        cdef int i, v, b, m, side
        cdef int64_t* row
        cdef int64_t* S = &self.state[0]
        cdef int64_t C, x, F, Cf, k, lead, child, clk, P, L, wl
        cdef int tlo, thi
        cdef int64_t* chbase
        for i in range(self.ninst):
            row = &self.inst[i, 0]
            if row[K_KIND] == 0:
                continue
            m = <int>row[K_M]
            C = row[K_C]
            chbase = &self.msg[0] + row[K_MSG]
            for v in range(m):
                x = (S[row[K_OFF_C] + v] + self.R) % C
                if row[K_KIND] == KIND_A:
                    for b in range(2):
                        Cf = row[K_CF0 + b]
                        k = row[K_K0 + b]
                        F = filter_F(S, row[K_OFF_F0 + b], m, v, self.eff)
                        lead = m
                        if F < Cf and F % k == 0:
                            lead = (F // k) % m
                        self._seed(row, b, v, m, x, lead)
                        if i == 0:
                            self.seed_lead[(row[K_LO] + v) * 2 + b] = -1 if lead == m else lead
                        self._stream_send(row, b, v, m)
                    side = 0 if v < row[K_SPLIT] else 1
                    for b in range(2):
                        tlo = 0 if b == 0 else <int>row[K_SPLIT]
                        thi = <int>row[K_SPLIT] if b == 0 else m
                        clk = -1
                        if b == side:
                            clk = self._child_clock(row[K_CH0 + side], row[K_LO] + v)
                        if self.eff:
                            efilter_send(S, row[K_OFF_F0 + b], m, v, row[K_CF0 + b], row[K_X],
                                         tlo, thi, clk, chbase + (2 * self.R + b) * m * m)
                        else:
                            bfilter_send(S, row[K_OFF_F0 + b], m, v, row[K_CF0 + b], tlo, thi,
                                         clk, chbase + (2 * self.R + b) * m * m)
                else:
                    Cf = row[K_CF0]
                    k = row[K_K0]
                    F = filter_F(S, row[K_OFF_F0], m, v, self.eff)
                    lead = m
                    if F < Cf and F % k == 0:
                        lead = (F // k) % m
                    self._seed(row, 0, v, m, x, lead)
                    self._stream_send(row, 0, v, m)
                    P = (S[row[K_OFF_P] + v] + 1) % self.R
                    S[row[K_OFF_P] + v] = P
                    if v == 0:
                        bcast(chbase + (2 * self.R + 1) * m * m, m, 0, P)
                    L = S[row[K_OFF_L] + v]
                    if lead != m:
                        L = self.R
                    wl = 0 if (P == 0 and L == 0) else m
                    L = L - 1 if L > 0 else 0
                    S[row[K_OFF_L] + v] = L
                    self._seed(row, 1, v, m, x, wl)
                    self._stream_send(row, 1, v, m)
                    if i == 0:
                        self.seed_lead[(row[K_LO] + v) * 2] = -1 if lead == m else lead
                        self.seed_lead[(row[K_LO] + v) * 2 + 1] = -1 if wl == m else wl
                    clk = self._child_clock(row[K_CH0], row[K_LO] + v)
                    if self.eff:
                        efilter_send(S, row[K_OFF_F0], m, v, Cf, row[K_X], 0, m, clk,
                                     chbase + 2 * self.R * m * m)
                    else:
                        bfilter_send(S, row[K_OFF_F0], m, v, Cf, 0, m, clk,
                                     chbase + 2 * self.R * m * m)

    cdef int64_t _reference(self, int64_t* row, int c, int v, int m) nogil:
        cdef int64_t* S = &self.state[0]
        cdef int s, j
        cdef int64_t W
        if c < 2 * self.R:
            s = c // self.R
            j = c % self.R
            W = row[K_W0 + s]
            if j >= king_rounds(<int>row[K_T0 + s]):
                j = king_rounds(<int>row[K_T0 + s]) - 1
            return king_reference(<int>row[K_T0 + s], j,
                                  S + row[K_OFF_S0 + s] + (v * self.R + (c % self.R)) * W)
        if row[K_KIND] == KIND_B and c == 2 * self.R + 1:
            return S[row[K_OFF_P] + v]
        return filter_ref(S, row[K_OFF_F0 + (c - 2 * self.R)], m, v, self.eff,
                          self.chan[row[K_CHAN] + c, CH_CF])

    cdef int64_t _adversary_phase(self, int64_t r, int64_t* bits) nogil:
        cdef int i, c, v, w, m
        cdef int64_t* row
        cdef int64_t* ch
        cdef int64_t* cm
        cdef int64_t honest, code, g, sref, rref, items = 0, ib
        for i in range(self.ninst):
            row = &self.inst[i, 0]
            if row[K_KIND] == 0:
                continue
            m = <int>row[K_M]
            for c in range(self.nchan):
                ch = &self.chan[row[K_CHAN] + c, 0]
                cm = &self.msg[0] + row[K_MSG] + c * m * m
                ib = ch[CH_BITS]
                for v in range(m):
                    g = row[K_LO] + v
                    if not self.faulty[g]:
                        for w in range(m):
                            if cm[v * m + w] != -1:
                                bits[g] += ib
                        continue
                    if self.strat == S_SILENT:
                        for w in range(m):
                            cm[v * m + w] = -1
                        continue
                    sref = 0
                    if self.strat == S_EQUIV or self.strat == S_JUMP:
                        sref = self._reference(row, c, v, m)
                    for w in range(m):
                        honest = cm[v * m + w]
                        rref = 0
                        if self.strat == S_SPLIT:
                            rref = self._reference(row, c, w, m)
                        code = adv_code(self.strat, self.sseed, self.delta, self.split, r, ch, g,
                                        row[K_LO] + w, w, m, honest, sref, rref)
                        cm[v * m + w] = code
                        if code != -1:
                            items += 1
        return items

    cdef void _recv_phase(self) nogil:
        cdef int i, v, b, m
        cdef int64_t* row
        cdef int64_t* S = &self.state[0]
        cdef int64_t* chbase
        cdef int64_t box[MAXM]
        cdef int64_t o0, o1, C, Cf, size
        cdef int tlo, thi
        for i in range(self.ninst):
            row = &self.inst[i, 0]
            m = <int>row[K_M]
            C = row[K_C]
            if row[K_KIND] == 0:
                S[row[K_OFF_C]] = (S[row[K_OFF_C]] + 1) % C
                continue
            chbase = &self.msg[0] + row[K_MSG]
            for v in range(m):
                o0 = self._stream_recv(row, 0, v, m)
                o1 = self._stream_recv(row, 1, v, m)
                if i == 0:
                    self.last_out[(row[K_LO] + v) * 2] = o0
                    self.last_out[(row[K_LO] + v) * 2 + 1] = o1
                if row[K_KIND] == KIND_A:
                    for b in range(2):
                        tlo = 0 if b == 0 else <int>row[K_SPLIT]
                        thi = <int>row[K_SPLIT] if b == 0 else m
                        Cf = row[K_CF0 + b]
                        size = self.chan[row[K_CHAN] + 2 * self.R + b, CH_SIZE]
                        self._load_box(chbase + (2 * self.R + b) * m * m, m, v, size, box)
                        if self.eff:
                            efilter_recv(S, row[K_OFF_F0 + b], m, v, Cf, box)
                        else:
                            bfilter_recv(S, row[K_OFF_F0 + b], m, v, Cf, row[K_X], tlo, thi, box)
                else:
                    Cf = row[K_CF0]
                    size = self.chan[row[K_CHAN] + 2 * self.R, CH_SIZE]
                    self._load_box(chbase + 2 * self.R * m * m, m, v, size, box)
                    if self.eff:
                        efilter_recv(S, row[K_OFF_F0], m, v, Cf, box)
                    else:
                        bfilter_recv(S, row[K_OFF_F0], m, v, Cf, row[K_X], 0, m, box)
                    if v != 0:
                        size = self.chan[row[K_CHAN] + 2 * self.R + 1, CH_SIZE]
                        self._load_box(chbase + (2 * self.R + 1) * m * m, m, v, size, box)
                        if box[0] != -1:
                            S[row[K_OFF_P] + v] = box[0]
                if row[K_KIND] == KIND_A:
                    if 0 <= o1 < C:
                        S[row[K_OFF_C] + v] = o1
                    elif 0 <= o0 < C:
                        S[row[K_OFF_C] + v] = o0
                    else:
                        S[row[K_OFF_C] + v] = (S[row[K_OFF_C] + v] + 1) % C
                else:
                    if 0 <= o1 < C:
                        S[row[K_OFF_C] + v] = o1
                    elif 0 <= o0 < C:
                        S[row[K_OFF_C] + v] = o0
                    else:
                        S[row[K_OFF_C] + v] = (S[row[K_OFF_C] + v] + 1) % C

    def run(self, int H, cnp.int64_t[:, ::1] recC, cnp.int64_t[:, ::1] recbits,
            cnp.int64_t[:, ::1] recinst, cnp.int64_t[:, :, ::1] recF,
            cnp.int64_t[:, :, ::1] reclead, cnp.int64_t[:, :, ::1] reckout,
            cnp.int64_t[::1] recadv):
        """Execute H rounds, writing row h of every record array."""
        cdef int h, g, b, i, v, nb, pos, m
        cdef int64_t* row0
        cdef int64_t* row
        cdef int64_t* S
        cdef int64_t F, Cf
        with nogil:
            for h in range(H):
                self.round += 1
                memset(&self.msg[0], 0xFF, self.msg.shape[0] * sizeof(int64_t))
                for g in range(2 * self.n):
                    self.seed_lead[g] = -1
                    self.last_out[g] = -1
                for g in range(self.n):
                    recbits[h, g] = 0
                self._send_phase()
                recadv[h] = self._adversary_phase(self.round, &recbits[h, 0])
                self._recv_phase()
                S = &self.state[0]
                row0 = &self.inst[0, 0]
                for g in range(self.n):
                    recC[h, g] = S[row0[K_OFF_C] + g]
                    for b in range(2):
                        reclead[h, g, b] = self.seed_lead[g * 2 + b]
                        reckout[h, g, b] = self.last_out[g * 2 + b]
                    nb = recF.shape[2]
                    for b in range(nb):
                        recF[h, g, b] = -1
                        if row0[K_KIND] != 0:
                            Cf = row0[K_CF0 + b]
                            F = filter_F(S, row0[K_OFF_F0 + b], self.n, g, self.eff)
                            if F < Cf:
                                recF[h, g, b] = F
                pos = 0
                for i in range(self.ninst):
                    row = &self.inst[i, 0]
                    m = <int>row[K_M]
                    for v in range(m):
                        recinst[h, pos] = S[row[K_OFF_C] + v]
                        pos += 1
