import json, itertools

M,F,U='masc','fem','unspecified'
S,P='sing','plur'

def form(surface, lemma, cat, g=U, n=U, p=U):
    return {"surface":surface,"lemma":lemma,"category":cat,"gender":g,"number":n,"person":p}

DETS = [("le","la","les"),("un","une","des"),("mon","ma","mes"),("ce","cette","ces"),("son","sa","ses")]
SG_DETS = [("le","la"),("un","une"),("mon","ma"),("ce","cette")]
BOTH = [("chat","chatte","chats","chattes"),("chien","chienne","chiens","chiennes"),("lion","lionne","lions","lionnes"),
        ("voisin","voisine","voisins","voisines"),("cousin","cousine","cousins","cousines"),("marchand","marchande","marchands","marchandes"),
        ("boulanger","boulangère","boulangers","boulangères"),("danseur","danseuse","danseurs","danseuses"),
        ("musicien","musicienne","musiciens","musiciennes"),("gagnant","gagnante","gagnants","gagnantes"),
        ("paysan","paysanne","paysans","paysannes"),("client","cliente","clients","clientes"),("patron","patronne","patrons","patronnes")]
FIXED = [("garçon","garçons",M),("fille","filles",F),("maison","maisons",F),("jardin","jardins",M),("pomme","pommes",F),
         ("livre","livres",M),("cheval","chevaux",M),("oiseau","oiseaux",M),("fleur","fleurs",F),("table","tables",F),
         ("ballon","ballons",M),("voiture","voitures",F),("cahier","cahiers",M),("robe","robes",F),("gâteau","gâteaux",M),
         ("bateau","bateaux",M),("fenêtre","fenêtres",F),("chanson","chansons",F),("bureau","bureaux",M),("tortue","tortues",F),
         ("lapin","lapins",M),("poule","poules",F)]
PRE = [("petit","petite","petits","petites"),("grand","grande","grands","grandes"),("joli","jolie","jolis","jolies"),
       ("beau","belle","beaux","belles"),("nouveau","nouvelle","nouveaux","nouvelles"),("bon","bonne","bons","bonnes")]
POST = [("noir","noire","noirs","noires"),("vert","verte","verts","vertes"),("blanc","blanche","blancs","blanches"),
        ("rond","ronde","ronds","rondes"),("lourd","lourde","lourds","lourdes"),("content","contente","contents","contentes"),
        ("fatigué","fatiguée","fatigués","fatiguées"),("méchant","méchante","méchants","méchantes"),
        ("gentil","gentille","gentils","gentilles"),("rouge",None,"rouges",None),("calme",None,"calmes",None)]
VERBS = [("mange","manges","mangent","manger"),("dort","dors","dorment","dormir"),("joue","joues","jouent","jouer"),
         ("chante","chantes","chantent","chanter"),("saute","sautes","sautent","sauter"),("regarde","regardes","regardent","regarder"),
         ("porte","portes","portent","porter"),("cherche","cherches","cherchent","chercher"),("court","cours","courent","courir"),
         ("aime","aimes","aiment","aimer"),("trouve","trouves","trouvent","trouver"),("lave","laves","lavent","laver"),
         ("prend","prends","prennent","prendre")]
PRON_VERBS = [(("ai","as","a","avons"),"avoir"),(("vais","vas","va","allons"),"aller"),(("suis","es","est","sommes"),"être")]

ctr = {k:0 for k in ["det","sgdet","both","fixed","pre","post","verb","pron"]}
def take(kind, lst):
    v = lst[ctr[kind] % len(lst)]; ctr[kind]+=1; return v

def det_slider():
    m,f,p = take("det",DETS)
    return ("det",[form(m,m,"det",M,S),form(f,m,"det",F,S),form(p,m,"det",U,P)])
def sgdet_slider():
    m,f = take("sgdet",SG_DETS)
    return ("det",[form(m,m,"det",M,S),form(f,m,"det",F,S)])
def noun_slider(kind):
    if kind in ("both","exa"):
        ms,fs,mp,fp = take("both",BOTH)
        forms=[form(ms,ms,"nom",M,S,"p3"),form(mp,ms,"nom",M,P,"p3"),form(fs,ms,"nom",F,S,"p3")]
        if kind=="both": forms.append(form(fp,ms,"nom",F,P,"p3"))
        return ("nom",forms)
    sg,pl,g = take("fixed",FIXED)
    return ("nom",[form(sg,sg,"nom",g,S,"p3"),form(pl,sg,"nom",g,P,"p3")])
def adj_slider(pre):
    ms,fs,mp,fp = take("pre",PRE) if pre else take("post",POST)
    if fs is None:
        return ("adj",[form(ms,ms,"adj",U,S),form(mp,ms,"adj",U,P)])
    return ("adj",[form(ms,ms,"adj",M,S),form(fs,ms,"adj",F,S),form(mp,ms,"adj",M,P),form(fp,ms,"adj",F,P)])
def verb_slider():
    s3,s2,p3,lem = take("verb",VERBS)
    return ("ver",[form(s3,lem,"ver",U,S,"p3"),form(s2,lem,"ver",U,S,"p2"),form(p3,lem,"ver",U,P,"p3")])

# block = (type, noun_kind, size)
def np_block(noun_kind, size):
    """det + nom + adjectives; size in 2..5"""
    sl=[]; det = sgdet_slider() if noun_kind=="one" else det_slider()
    nk = "fixed" if noun_kind=="one" else noun_kind
    extra = size-2
    pre = extra>=2 or (extra==1 and ctr["pre"]%2==0)
    posts = extra-(1 if pre else 0)
    sl.append(det)
    if pre: sl.append(adj_slider(True))
    nom_at=len(sl); sl.append(noun_slider(nk))
    for _ in range(posts): sl.append(adj_slider(False))
    return sl, nom_at

SUBJ = {2:"fixed",3:"exa",4:"both"}
OBJ = {1:"one",2:"fixed",3:"exa",4:"both"}
def build(ex_id, n_sliders, plan):
    """plan: (subject_factor, [object factors], [sizes])"""
    sf, objs, sizes = plan
    sliders=[]; chains=[]
    if sf==5:
        forms_,lem = PRON_VERBS[ctr["pron"]%3]; ctr["pron"]+=1
        pron=[form("je","je","other",U,S,"p1"),form("tu","tu","other",U,S,"p2"),form("il","il","other",M,S,"p3"),
              form("elle","il","other",F,S,"p3"),form("nous","nous","other",U,P,"p1")]
        a,b,c,d=forms_
        verb=[form(a,lem,"ver",U,S,"p1"),form(b,lem,"ver",U,S,"p2"),form(c,lem,"ver",U,S,"p3"),form(d,lem,"ver",U,P,"p1")]
        sliders += [("other",pron),("ver",verb)]
        chains.append({"members":[0,1],"enforced":["number","person"]})
    else:
        sl, nom_at = np_block(SUBJ[sf], sizes[0]-1)
        base=len(sliders); sliders+=sl
        sliders.append(verb_slider())
        chains.append({"members":[base+nom_at, len(sliders)-1],"enforced":["number","person"]})
        chains.append({"members":list(range(base,base+len(sl))),"enforced":["gender","number"]})
    for of,size in zip(objs,sizes[1:]):
        sl, _ = np_block(OBJ[of], size)
        base=len(sliders); sliders+=sl
        chains.append({"members":list(range(base,base+len(sl))),"enforced":["gender","number"]})
    assert len(sliders)==n_sliders,(ex_id,n_sliders,plan,len(sliders))
    return {"id":ex_id,"sliders":[{"label":l,"forms":f} for l,f in sliders],"chains":chains}

def gs_pred(ex_id, variant):
    g = lambda s,gg,n,p: form(s,s,"other",gg,n,p)
    if variant==0:
        gs=[g("je",U,S,"p1"),g("nous",U,P,"p1")]
        pr=[g("chantons",U,P,"p1"),g("chantez",U,P,"p2"),g("chantent",U,P,"p3")]
        en=["number","person"]
    elif variant==1:
        gs=[g("le petit chat",M,S,"p3"),g("les petits chats",M,P,"p3")]
        pr=[g("dort dans le jardin",U,S,"p3"),g("dors dans le jardin",U,S,"p2"),g("dorment dans le jardin",U,P,"p3")]
        en=["number","person"]
    else:
        gs=[g("la grande fille",F,S,"p3"),g("les grandes filles",F,P,"p3")]
        pr=[g("est content",M,S,"p3"),g("est contente",F,S,"p3"),g("sont contents",M,P,"p3"),g("sont contentes",F,P,"p3")]
        en=["gender","number","person"]
    return {"id":ex_id,"sliders":[{"label":"GS","forms":gs},{"label":"Pred","forms":pr}],"chains":[{"members":[0,1],"enforced":en}]}

# (sliders, solutions) pairs, sorted jointly
slider_hist={2:3,3:7,4:2,5:1,6:2,7:4,8:9,9:6,10:4,11:3,12:1,13:1}
sol_hist={1:1,2:6,3:4,4:7,5:2,6:8,8:6,9:1,10:1,12:1,16:2,18:3,20:1}
sl=[k for k,v in sorted(slider_hist.items()) for _ in range(v)]
so=[k for k,v in sorted(sol_hist.items()) for _ in range(v)]
PLANS = {  # solutions -> list of (subject factor, object factors)
 2:[(2,[])], 3:[(3,[])], 4:[(4,[]),(2,[2])], 5:[(5,[1]),(5,[1,1])], 6:[(3,[2]),(2,[3])], 8:[(4,[2]),(2,[4])],
 9:[(3,[3])], 10:[(5,[2,1])], 12:[(4,[3])], 16:[(4,[4])], 18:[(3,[3,2]),(2,[3,3])], 20:[(5,[4,1,1])],
}
def sizes_for(sf, objs, n):
    lo=[2 if sf==5 else 3]+[2]*len(objs); hi=[2 if sf==5 else 6]+[5]*len(objs)
    s=lo[:]; i=0
    while sum(s)<n:
        j=i%len(s); i+=1
        if s[j]<hi[j]: s[j]+=1
        if i>100: return None
    return s
exs=[]; gsp=0; used={}
for i,(n,k) in enumerate(zip(sl,so)):
    ex_id="T%02d"%(i+1)
    if n==2:
        exs.append(gs_pred(ex_id,gsp)); gsp+=1; continue
    opts=PLANS[k]; c=used.get(k,0); used[k]=c+1
    for j in range(len(opts)):
        sf,objs=opts[(c+j)%len(opts)]
        s=sizes_for(sf,objs,n)
        if s: break
    exs.append(build(ex_id,n,(sf,objs,s)))

# brute-force check
def ok(ex,v):
    for ch in ex["chains"]:
        for f in ch["enforced"]:
            vals={ex["sliders"][m]["forms"][v[m]][f] for m in ch["members"]}-{U}
            if len(vals)>1: return False
    return True
def count(ex):
    # pruned dfs
    n=len(ex["sliders"]); res=[0]
    def rec(i,v):
        if i==n:
            res[0]+=ok(ex,v); return
        for p in range(len(ex["sliders"][i]["forms"])):
            v.append(p)
            good=True
            for ch in ex["chains"]:
                ms=[m for m in ch["members"] if m<=i]
                if i in ch["members"]:
                    for f in ch["enforced"]:
                        vals={ex["sliders"][m]["forms"][v[m]][f] for m in ms}-{U}
                        if len(vals)>1: good=False
            if good: rec(i+1,v)
            v.pop()
    rec(0,[]); return res[0]
for ex,n,k in zip(exs,sl,so):
    c=count(ex); assert c==k,(ex["id"],c,k)
    assert len(ex["sliders"])==n
pack={"pack_id":"tirettes-fr-43","exercises":exs}
json.dump(pack,open("tirettes_pack.json","w"),ensure_ascii=False,indent=1)
print("ok",len(exs))
